#include "ftap/evaluate.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "ftap/io.hpp"

namespace ftap {

SubjectPrediction aggregate_subject(std::span<const Prediction> trials)
{
    if (trials.empty()) throw Error(ErrorKind::Config, "aggregate_subject needs at least one trial");
    SubjectPrediction s;
    s.person_id = trials.front().person_id;
    s.truth = trials.front().truth;
    s.trials = trials.size();
    for (const auto& t : trials) {
        const auto c = static_cast<std::size_t>(class_index(t.predicted));
        s.votes[c] += 1.0;
        s.summed_score[c] += t.proba[c];
    }
    std::size_t best = 0;
    for (std::size_t c = 1; c < kNumClasses; ++c) {
        if (s.votes[c] > s.votes[best] || (s.votes[c] == s.votes[best] && s.summed_score[c] > s.summed_score[best]))
            best = c;
    }
    s.predicted = label_from_index(static_cast<int>(best));
    return s;
}

std::vector<SubjectPrediction> aggregate_subjects(const std::vector<Prediction>& predictions)
{
    std::vector<std::string> order;
    std::map<std::string, std::vector<Prediction>> by_subject;
    for (const auto& p : predictions) {
        auto [it, inserted] = by_subject.try_emplace(p.person_id);
        if (inserted) order.push_back(p.person_id);
        it->second.push_back(p);
    }
    std::vector<SubjectPrediction> out;
    out.reserve(order.size());
    for (const auto& id : order) out.push_back(aggregate_subject(by_subject[id]));
    return out;
}

ConfusionMatrix confusion(std::span<const Label> truth, std::span<const Label> predicted)
{
    if (truth.size() != predicted.size()) throw Error(ErrorKind::LengthMismatch, "confusion: label sequences differ in length");
    ConfusionMatrix cm = ConfusionMatrix::Zero();
    for (std::size_t i = 0; i < truth.size(); ++i) ++cm(class_index(truth[i]), class_index(predicted[i]));
    return cm;
}

ConfusionMatrix confusion(const std::vector<Prediction>& predictions)
{
    std::vector<Label> t, p;
    for (const auto& x : predictions) {
        t.push_back(x.truth);
        p.push_back(x.predicted);
    }
    return confusion(t, p);
}

ConfusionMatrix confusion(const std::vector<SubjectPrediction>& subjects)
{
    std::vector<Label> t, p;
    for (const auto& x : subjects) {
        t.push_back(x.truth);
        p.push_back(x.predicted);
    }
    return confusion(t, p);
}

MetricSet metrics(const ConfusionMatrix& cm)
{
    const auto total = cm.sum();
    if (total <= 0) throw Error(ErrorKind::Config, "metrics: empty confusion matrix");
    MetricSet m;
    m.accuracy = 100.0 * static_cast<double>(cm.trace()) / static_cast<double>(total);
    for (int c = 0; c < 4; ++c) {
        const auto tp = static_cast<double>(cm(c, c));
        const auto col = static_cast<double>(cm.col(c).sum());
        const auto row = static_cast<double>(cm.row(c).sum());
        const auto name = std::string(to_string(label_from_index(c)));
        const auto i = static_cast<std::size_t>(c);
        if (col > 0) {
            m.precision[i] = 100.0 * tp / col;
        } else {
            m.warnings.push_back("no predictions of " + name + "; precision set to 0");
        }
        if (row > 0) {
            m.recall[i] = 100.0 * tp / row;
        } else {
            m.warnings.push_back("no true " + name + " samples; recall set to 0");
        }
        const double denom = m.precision[i] + m.recall[i];
        m.f1[i] = denom > 0.0 ? 2.0 * m.precision[i] * m.recall[i] / denom : 0.0;

        const double weight = row / static_cast<double>(total);
        m.macro_precision += m.precision[i] / 4.0;
        m.macro_recall += m.recall[i] / 4.0;
        m.macro_f1 += m.f1[i] / 4.0;
        m.weighted_precision += weight * m.precision[i];
        m.weighted_recall += weight * m.recall[i];
        m.weighted_f1 += weight * m.f1[i];
    }
    return m;
}

double round_half_up(double value, int decimals)
{
    const double scale = std::pow(10.0, decimals);
    const double scaled = std::abs(value) * scale;
    // nudge absorbs representation error in values such as 89.655
    const double rounded = std::floor(scaled + 0.5 + 1e-9) / scale;
    return std::copysign(rounded, value);
}

EvaluationReport build_report(std::vector<Prediction> predictions, std::string classifier, nlohmann::json params,
                              std::vector<std::string> features)
{
    if (predictions.empty()) throw Error(ErrorKind::Config, "cannot build a report from zero predictions");
    EvaluationReport r;
    r.classifier = std::move(classifier);
    r.classifier_params = std::move(params);
    r.features = std::move(features);
    r.trials = std::move(predictions);
    r.subjects = aggregate_subjects(r.trials);
    r.cm_data = confusion(r.trials);
    r.cm_subject = confusion(r.subjects);
    r.per_data = metrics(r.cm_data);
    r.per_subject = metrics(r.cm_subject);
    return r;
}

namespace {

nlohmann::json matrix_json(const ConfusionMatrix& cm)
{
    auto rows = nlohmann::json::array();
    for (int r = 0; r < 4; ++r) {
        auto row = nlohmann::json::array();
        for (int c = 0; c < 4; ++c) row.push_back(cm(r, c));
        rows.push_back(row);
    }
    return rows;
}

nlohmann::json metrics_json(const MetricSet& m)
{
    nlohmann::json per_class = nlohmann::json::object();
    for (std::size_t c = 0; c < kNumClasses; ++c)
        per_class[std::string(to_string(kClassOrder[c]))] = {{"precision", round_half_up(m.precision[c])},
                                                            {"recall", round_half_up(m.recall[c])},
                                                            {"f1", round_half_up(m.f1[c])}};
    return {
        {"accuracy", round_half_up(m.accuracy)},
        {"macro", {{"precision", round_half_up(m.macro_precision)}, {"recall", round_half_up(m.macro_recall)}, {"f1", round_half_up(m.macro_f1)}}},
        {"weighted", {{"precision", round_half_up(m.weighted_precision)}, {"recall", round_half_up(m.weighted_recall)}, {"f1", round_half_up(m.weighted_f1)}}},
        {"per_class", per_class},
        {"warnings", m.warnings},
    };
}

std::string pct(double v)
{
    std::ostringstream os;
    os.setf(std::ios::fixed);
    os.precision(2);
    os << round_half_up(v);
    return os.str();
}

}  // namespace

nlohmann::json report_json(const EvaluationReport& r)
{
    nlohmann::json classes = nlohmann::json::array();
    for (auto l : kClassOrder) classes.push_back(to_string(l));
    return {
        {"schema_version", 1},
        {"classes", classes},
        {"classifier", r.classifier},
        {"classifier_params", r.classifier_params},
        {"features", r.features},
        {"counts", {{"trials", r.trials.size()}, {"subjects", r.subjects.size()}}},
        {"per_data", {{"confusion", matrix_json(r.cm_data)}, {"metrics", metrics_json(r.per_data)}}},
        {"per_subject", {{"confusion", matrix_json(r.cm_subject)}, {"metrics", metrics_json(r.per_subject)}}},
    };
}

std::string confusion_csv(const ConfusionMatrix& cm)
{
    std::string out = "true\\pred,HC,PD,PSP,MSA\n";
    for (int r = 0; r < 4; ++r) {
        out += std::string(to_string(label_from_index(r)));
        for (int c = 0; c < 4; ++c) out += ',' + std::to_string(cm(r, c));
        out += '\n';
    }
    return out;
}

std::string metrics_csv(const EvaluationReport& r)
{
    std::string out = "target,class,accuracy,precision,recall,f1\n";
    auto emit = [&out](const std::string& target, const MetricSet& m) {
        for (std::size_t c = 0; c < kNumClasses; ++c)
            out += target + ',' + std::string(to_string(kClassOrder[c])) + ",," + pct(m.precision[c]) + ',' +
                   pct(m.recall[c]) + ',' + pct(m.f1[c]) + '\n';
        out += target + ",macro," + pct(m.accuracy) + ',' + pct(m.macro_precision) + ',' + pct(m.macro_recall) + ',' +
               pct(m.macro_f1) + '\n';
        out += target + ",weighted," + pct(m.accuracy) + ',' + pct(m.weighted_precision) + ',' +
               pct(m.weighted_recall) + ',' + pct(m.weighted_f1) + '\n';
    };
    emit("data", r.per_data);
    emit("subject", r.per_subject);
    return out;
}

std::string confusion_svg(const ConfusionMatrix& cm, const std::string& title)
{
    constexpr int cell = 80, left = 90, top = 60;
    const auto peak = std::max<std::int64_t>(1, cm.maxCoeff());
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << left + 4 * cell + 20 << "\" height=\""
       << top + 4 * cell + 50 << "\" font-family=\"sans-serif\" font-size=\"14\">\n";
    os << "<text x=\"" << left << "\" y=\"24\" font-size=\"16\">" << title << "</text>\n";
    for (int c = 0; c < 4; ++c)
        os << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top - 8 << "\" text-anchor=\"middle\">"
           << to_string(label_from_index(c)) << "</text>\n";
    for (int r = 0; r < 4; ++r) {
        os << "<text x=\"" << left - 10 << "\" y=\"" << top + r * cell + cell / 2 + 5 << "\" text-anchor=\"end\">"
           << to_string(label_from_index(r)) << "</text>\n";
        for (int c = 0; c < 4; ++c) {
            const double t = static_cast<double>(cm(r, c)) / static_cast<double>(peak);
            const int shade = static_cast<int>(std::lround(255.0 * (1.0 - 0.8 * t)));
            os << "<rect x=\"" << left + c * cell << "\" y=\"" << top + r * cell << "\" width=\"" << cell
               << "\" height=\"" << cell << "\" fill=\"rgb(" << shade << ',' << shade << ",255)\" stroke=\"#444\"/>\n";
            os << "<text x=\"" << left + c * cell + cell / 2 << "\" y=\"" << top + r * cell + cell / 2 + 5
               << "\" text-anchor=\"middle\">" << cm(r, c) << "</text>\n";
        }
    }
    os << "<text x=\"" << left + 2 * cell << "\" y=\"" << top + 4 * cell + 30 << "\" text-anchor=\"middle\">predicted</text>\n";
    os << "</svg>\n";
    return os.str();
}

void emit_report(const EvaluationReport& r, const std::filesystem::path& dir)
{
    if (r.trials.empty()) throw Error(ErrorKind::Config, "refusing to write a report without predictions");
    try {
        std::filesystem::create_directories(dir);
    } catch (const std::filesystem::filesystem_error& e) {
        throw Error(ErrorKind::Io, "cannot create " + dir.string() + ": " + e.what());
    }
    io::write_text(dir / "report.json", report_json(r).dump(2) + "\n");
    io::write_text(dir / "predictions.csv", predictions_csv(r.trials));
    std::string subjects = "person_id,true,pred,trials,votes_HC,votes_PD,votes_PSP,votes_MSA\n";
    for (const auto& s : r.subjects) {
        subjects += s.person_id + ',' + std::string(to_string(s.truth)) + ',' + std::string(to_string(s.predicted)) + ',' +
                    std::to_string(s.trials);
        for (double v : s.votes) subjects += ',' + std::to_string(static_cast<long>(v));
        subjects += '\n';
    }
    io::write_text(dir / "subjects.csv", subjects);
    io::write_text(dir / "confusion_data.csv", confusion_csv(r.cm_data));
    io::write_text(dir / "confusion_subject.csv", confusion_csv(r.cm_subject));
    io::write_text(dir / "metrics.csv", metrics_csv(r));
    io::write_text(dir / "confusion_data.svg", confusion_svg(r.cm_data, "Confusion matrix (each trial)"));
    io::write_text(dir / "confusion_subject.svg", confusion_svg(r.cm_subject, "Confusion matrix (each subject)"));
}

}  // namespace ftap
