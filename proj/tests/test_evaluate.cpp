#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <array>
#include <filesystem>

#include "ftap/evaluate.hpp"
#include "ftap/io.hpp"
#include "ftap/synthetic.hpp"

using namespace ftap;

namespace {

Prediction trial(const std::string& who, Label truth, Label pred, double p)
{
    Prediction t;
    t.person_id = who;
    t.trial_id = std::to_string(p);
    t.truth = truth;
    t.predicted = pred;
    t.proba.fill((1.0 - p) / 3.0);
    t.proba[static_cast<std::size_t>(class_index(pred))] = p;
    return t;
}

ConfusionMatrix cm_from(std::array<std::array<int, 4>, 4> rows)
{
    ConfusionMatrix cm;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) cm(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return cm;
}

// per-subject and per-trial matrices consistent with the published tables
const ConfusionMatrix kSubject = cm_from({{{10, 0, 1, 0}, {1, 12, 0, 1}, {0, 1, 13, 2}, {0, 0, 0, 13}}});
const ConfusionMatrix kData = cm_from({{{42, 3, 4, 3}, {10, 34, 14, 9}, {5, 14, 42, 15}, {2, 5, 5, 60}}});

}  // namespace

TEST_CASE("subject aggregation")
{
    const std::vector<Prediction> modal{trial("s", Label::PD, Label::PD, 0.5), trial("s", Label::PD, Label::PD, 0.4),
                                        trial("s", Label::PD, Label::PSP, 0.9)};
    CHECK(aggregate_subject(modal).predicted == Label::PD);

    const std::vector<Prediction> tie{trial("h", Label::HC, Label::HC, 0.55), trial("h", Label::HC, Label::PSP, 0.61),
                                      trial("h", Label::HC, Label::HC, 0.40), trial("h", Label::HC, Label::PSP, 0.62)};
    const auto s = aggregate_subject(tie);
    CHECK(s.predicted == Label::PSP);
    CHECK(s.votes[0] == 2.0);
    CHECK(s.votes[2] == 2.0);

    const std::vector<Prediction> exact{trial("e", Label::MSA, Label::MSA, 0.5), trial("e", Label::MSA, Label::PD, 0.5)};
    CHECK(aggregate_subject(exact).predicted == Label::PD);

    const std::vector<Prediction> single{trial("x", Label::HC, Label::MSA, 0.3)};
    CHECK(aggregate_subject(single).predicted == Label::MSA);
    CHECK_THROWS_AS(aggregate_subject(std::vector<Prediction>{}), Error);
}

TEST_CASE("all-correct trials give all-correct subjects")
{
    std::vector<Prediction> preds;
    for (int s = 0; s < 8; ++s)
        for (int t = 0; t < 3; ++t) {
            const auto l = label_from_index(s % 4);
            preds.push_back(trial("s" + std::to_string(s), l, l, 0.4 + 0.1 * t));
        }
    const auto subjects = aggregate_subjects(preds);
    CHECK(subjects.size() == 8);
    for (const auto& s : subjects) CHECK(s.predicted == s.truth);
    CHECK(confusion(subjects) == ConfusionMatrix::Identity() * 2);
}

TEST_CASE("confusion counts")
{
    synthetic::Rng rng(3);
    std::vector<Label> t, p;
    std::array<std::array<long, 4>, 4> tally{};
    for (int i = 0; i < 500; ++i) {
        t.push_back(label_from_index(static_cast<int>(rng.bits() % 4)));
        p.push_back(label_from_index(static_cast<int>(rng.bits() % 4)));
        ++tally[static_cast<std::size_t>(class_index(t.back()))][static_cast<std::size_t>(class_index(p.back()))];
    }
    const auto cm = confusion(t, p);
    CHECK(cm.sum() == 500);
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) CHECK(cm(r, c) == tally[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    std::vector<Label> short_p(p.begin(), p.begin() + 3);
    CHECK_THROWS_AS(confusion(t, short_p), Error);
}

TEST_CASE("published per-subject metrics")
{
    const auto m = metrics(kSubject);
    CHECK(round_half_up(m.accuracy) == 88.89);
    CHECK(round_half_up(m.precision[0]) == 90.91);
    CHECK(round_half_up(m.recall[0]) == 90.91);
    CHECK(round_half_up(m.f1[0]) == 90.91);
    CHECK(round_half_up(m.precision[3]) == 81.25);
    CHECK(round_half_up(m.recall[3]) == 100.0);
    CHECK(round_half_up(m.f1[3]) == 89.66);
    CHECK(round_half_up(m.macro_precision) == 89.33);
    CHECK(round_half_up(m.macro_recall) == 89.47);
    CHECK(round_half_up(m.macro_f1) == 89.03);
}

TEST_CASE("published per-data metrics")
{
    const auto m = metrics(kData);
    CHECK(round_half_up(m.accuracy) == 66.67);
    CHECK(round_half_up(m.recall[0]) == 80.77);
    CHECK(round_half_up(m.macro_precision) == 66.37);
    CHECK(round_half_up(m.macro_recall) == 67.53);
    CHECK(round_half_up(m.macro_f1) == 66.50);
}

TEST_CASE("metric identities")
{
    const auto id = metrics(ConfusionMatrix::Identity() * 5);
    CHECK(id.accuracy == 100.0);
    CHECK(id.macro_f1 == 100.0);
    for (std::size_t c = 0; c < 4; ++c) CHECK(id.precision[c] == 100.0);

    ConfusionMatrix no_msa = kSubject;
    no_msa.col(3).setZero();
    no_msa(3, 0) = 13;
    const auto m = metrics(no_msa);
    CHECK(m.precision[3] == 0.0);
    CHECK(m.f1[3] == 0.0);
    CHECK_FALSE(m.warnings.empty());
    CHECK_THROWS_AS(metrics(ConfusionMatrix::Zero()), Error);

    for (const auto& mm : {metrics(kSubject), metrics(kData)}) {
        for (std::size_t c = 0; c < 4; ++c) {
            CHECK(mm.precision[c] >= 0.0);
            CHECK(mm.precision[c] <= 100.0);
            const double hm = mm.precision[c] + mm.recall[c] > 0 ? 2 * mm.precision[c] * mm.recall[c] / (mm.precision[c] + mm.recall[c]) : 0.0;
            CHECK(mm.f1[c] == doctest::Approx(hm));
        }
    }
}

TEST_CASE("metrics commute with class permutation")
{
    const std::array<int, 4> perm{2, 0, 3, 1};
    ConfusionMatrix p;
    for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) p(perm[static_cast<std::size_t>(r)], perm[static_cast<std::size_t>(c)]) = kData(r, c);
    const auto a = metrics(kData), b = metrics(p);
    for (std::size_t c = 0; c < 4; ++c) {
        const auto pc = static_cast<std::size_t>(perm[c]);
        CHECK(b.precision[pc] == doctest::Approx(a.precision[c]));
        CHECK(b.recall[pc] == doctest::Approx(a.recall[c]));
        CHECK(b.f1[pc] == doctest::Approx(a.f1[c]));
    }
    CHECK(b.macro_f1 == doctest::Approx(a.macro_f1));
    CHECK(b.accuracy == a.accuracy);
}

TEST_CASE("round half up")
{
    CHECK(round_half_up(89.655) == 89.66);
    CHECK(round_half_up(0.125) == 0.13);
    CHECK(round_half_up(-0.125) == -0.13);
    CHECK(round_half_up(66.6666) == 66.67);
}

TEST_CASE("report emission")
{
    const auto dir = std::filesystem::temp_directory_path() / "ftap_eval_emit";
    std::filesystem::remove_all(dir);
    std::vector<Prediction> preds;
    for (int s = 0; s < 8; ++s)
        for (int t = 0; t < 2; ++t)
            preds.push_back(trial("s" + std::to_string(s), label_from_index(s % 4), label_from_index((s + t) % 4), 0.6));
    const auto r = build_report(preds, "svm", {{"C", 1.0}}, {"f"});
    CHECK(r.cm_data.sum() == 16);
    CHECK(r.cm_subject.sum() == 8);
    for (int c = 0; c < 4; ++c) CHECK(r.cm_subject.row(c).sum() == 2);
    emit_report(r, dir);
    for (const char* f : {"report.json", "predictions.csv", "subjects.csv", "confusion_data.csv", "confusion_subject.csv",
                          "metrics.csv", "confusion_data.svg", "confusion_subject.svg"})
        CHECK(std::filesystem::exists(dir / f));
    const auto first = io::read_text(dir / "report.json");
    emit_report(build_report(preds, "svm", {{"C", 1.0}}, {"f"}), dir);
    CHECK(io::read_text(dir / "report.json") == first);
    CHECK(io::read_text(dir / "predictions.csv").rfind("person_id,trial_id,true,pred,p_HC,p_PD,p_PSP,p_MSA\n", 0) == 0);
    CHECK(io::read_text(dir / "confusion_data.csv").rfind("true\\pred,HC,PD,PSP,MSA\n", 0) == 0);

    CHECK_THROWS_AS(build_report({}, "svm", {}, {}), Error);
    EvaluationReport empty;
    CHECK_THROWS_AS(emit_report(empty, dir), Error);
}
