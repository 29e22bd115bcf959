#include <doctest.h>

#include <random>

#include "elad/domain.hpp"
#include "elad/errors.hpp"

using namespace elad;

TEST_CASE("numeric normalization reduces to an exact decimal string") {
    CHECK(normalize_numeric("78") == "78");
    CHECK(normalize_numeric("78.0") == "78");
    CHECK(normalize_numeric("5,760") == "5760");
    CHECK(normalize_numeric("$42.50") == "42.5");
    CHECK(normalize_numeric("+7") == "7");
    CHECK(normalize_numeric("007") == "7");
    CHECK(normalize_numeric("-0") == "0");
    CHECK(normalize_numeric("-0.250") == "-0.25");
    CHECK(normalize_numeric("  1,234,567.89 ") == "1234567.89");
    CHECK_THROWS_AS(normalize_numeric("no digits here"), Error);
}

TEST_CASE("normalization is idempotent") {
    std::mt19937_64 gen(7);
    for (int i = 0; i < 500; ++i) {
        std::string raw;
        if (gen() % 3 == 0) raw += '-';
        raw += std::to_string(gen() % 100000);
        if (gen() % 2) raw += "." + std::to_string(gen() % 1000);
        if (gen() % 4 == 0) raw += "00";
        std::string once = normalize_numeric(raw);
        CHECK(normalize_numeric(once) == once);
    }
}

TEST_CASE("answers_equal per-kind semantics") {
    auto numeric = TaskKind::numeric();
    CHECK(answers_equal(make_answer(numeric, "78"), make_answer(numeric, "78.0")));
    CHECK(answers_equal(make_answer(numeric, "5,760"), make_answer(numeric, "5760")));
    CHECK_FALSE(answers_equal(make_answer(numeric, "78"), make_answer(numeric, "79")));

    auto mc = TaskKind::multiple_choice({"A", "B", "C", "D"});
    CHECK_FALSE(answers_equal(make_answer(mc, "A"), make_answer(mc, "B")));
    CHECK(answers_equal(make_answer(mc, "a"), make_answer(mc, "(A)")));

    auto yn = TaskKind::yes_no();
    CHECK(answers_equal(make_answer(yn, "Yes"), make_answer(yn, "yes")));

    CHECK_THROWS_AS(answers_equal(make_answer(numeric, "1"), make_answer(yn, "yes")), Error);
    try {
        answers_equal(make_answer(numeric, "1"), make_answer(yn, "yes"));
        FAIL("expected kind mismatch");
    } catch (const Error& e) {
        CHECK(e.code() == Errc::kind_mismatch);
    }
}

TEST_CASE("make_answer validates per kind") {
    auto mc = TaskKind::multiple_choice({"A", "B"});
    CHECK(make_answer(mc, "b.").value == "B");
    CHECK_THROWS_AS(make_answer(mc, "Z"), Error);

    auto nli = TaskKind::nli({"entailment", "neutral", "contradiction"});
    CHECK(make_answer(nli, "Entailment").value == "ENTAILMENT");
    CHECK_THROWS_AS(make_answer(nli, "maybe"), Error);

    auto yn = TaskKind::yes_no();
    CHECK(make_answer(yn, "NO").value == "no");
    CHECK_THROWS_AS(make_answer(yn, "dunno"), Error);
}

TEST_CASE("task label invariants") {
    CHECK_THROWS_AS(TaskKind::multiple_choice({"A"}), Error);
    CHECK_THROWS_AS(TaskKind::multiple_choice({"A", "a"}), Error); // not distinct
    CHECK_THROWS_AS(TaskKind::nli({"entailment"}), Error);
}

TEST_CASE("answers_equal is an equivalence relation on well-formed answers") {
    auto numeric = TaskKind::numeric();
    std::mt19937_64 gen(11);
    std::vector<Answer> pool;
    for (int i = 0; i < 40; ++i) {
        long v = static_cast<long>(gen() % 20);
        std::string raw = std::to_string(v);
        switch (gen() % 3) {
            case 0: raw += ".0"; break;
            case 1: raw = "+" + raw; break;
            default: break;
        }
        pool.push_back(make_answer(numeric, raw));
    }
    for (const auto& a : pool) CHECK(answers_equal(a, a)); // reflexive
    for (const auto& a : pool)
        for (const auto& b : pool) CHECK(answers_equal(a, b) == answers_equal(b, a));
    for (const auto& a : pool)
        for (const auto& b : pool)
            for (const auto& c : pool)
                if (answers_equal(a, b) && answers_equal(b, c)) CHECK(answers_equal(a, c));
}
