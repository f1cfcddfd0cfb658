#include "ftap/selection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <json.hpp>
#include <spdlog/spdlog.h>

#include "ftap/io.hpp"
#include "ftap/parallel.hpp"

namespace ftap {

namespace {

constexpr double kBetaEps = 1e-15;
constexpr int kBetaMaxIter = 100000;
constexpr double kTiny = 1e-300;

// Continued fraction for the incomplete beta (modified Lentz).
double beta_continued_fraction(double a, double b, double x)
{
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < kTiny) d = kTiny;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= kBetaMaxIter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < kTiny) d = kTiny;
        c = 1.0 + aa / c;
        if (std::abs(c) < kTiny) c = kTiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < kBetaEps) return h;
    }
    throw Error(ErrorKind::Numerical, "incomplete beta continued fraction did not converge");
}

double log_beta(double a, double b)
{
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

bool better_subset(double score_a, const std::vector<std::string>& a, double score_b, const std::vector<std::string>& b)
{
    if (score_a != score_b) return score_a > score_b;
    if (a.size() != b.size()) return a.size() < b.size();
    auto sa = a, sb = b;
    std::sort(sa.begin(), sa.end());
    std::sort(sb.begin(), sb.end());
    return sa < sb;
}

const char* action_name(SffsAction a)
{
    switch (a) {
    case SffsAction::Start: return "start";
    case SffsAction::Include: return "include";
    case SffsAction::Exclude: return "exclude";
    }
    return "?";
}

nlohmann::json finite_or_null(double v)
{
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

}  // namespace

double incomplete_beta(double a, double b, double x, double xc)
{
    if (x <= 0.0) return 0.0;
    if (xc <= 0.0) return 1.0;
    const double log_front = a * std::log(x) + b * std::log(xc) - log_beta(a, b);
    if (x < (a + 1.0) / (a + b + 2.0)) return std::exp(log_front) * beta_continued_fraction(a, b, x) / a;
    return 1.0 - std::exp(log_front) * beta_continued_fraction(b, a, xc) / b;
}

double f_upper_tail(double f, double d1, double d2)
{
    if (std::isnan(f)) throw Error(ErrorKind::Numerical, "F statistic is NaN");
    if (f <= 0.0) return 1.0;
    if (std::isinf(f)) return 0.0;
    const double denom = d2 + d1 * f;
    return std::clamp(incomplete_beta(0.5 * d2, 0.5 * d1, d2 / denom, d1 * f / denom), 0.0, 1.0);
}

FTest anova_f(std::span<const SeriesXd> groups)
{
    if (groups.size() < 2) throw Error(ErrorKind::TooFewGroups, "anova needs at least 2 groups");
    Eigen::Index total = 0;
    double grand_sum = 0.0;
    for (const auto& g : groups) {
        if (g.size() == 0) throw Error(ErrorKind::TooFewGroups, "anova group is empty");
        total += g.size();
        grand_sum += g.sum();
    }
    const auto k = static_cast<double>(groups.size());
    const auto n = static_cast<double>(total);
    if (n <= k) throw Error(ErrorKind::TooFewGroups, "anova needs more observations than groups");
    const double grand_mean = grand_sum / n;

    double between = 0.0, within = 0.0;
    for (const auto& g : groups) {
        const double m = g.mean();
        between += static_cast<double>(g.size()) * (m - grand_mean) * (m - grand_mean);
        within += (g.array() - m).square().sum();
    }
    FTest out;
    out.df_between = k - 1.0;
    out.df_within = n - k;
    if (within == 0.0) {
        if (between == 0.0) throw Error(ErrorKind::DegenerateGroups, "all observations identical");
        out.f = std::numeric_limits<double>::infinity();
        out.p = 0.0;
        return out;
    }
    out.f = (between / out.df_between) / (within / out.df_within);
    out.p = f_upper_tail(out.f, out.df_between, out.df_within);
    return out;
}

std::vector<double> fdr_adjust(std::span<const double> pvalues)
{
    const std::size_t k = pvalues.size();
    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return pvalues[a] < pvalues[b]; });
    std::vector<double> adj(k);
    double running = std::numeric_limits<double>::infinity();
    for (std::size_t r = k; r-- > 0;) {
        const std::size_t i = order[r];
        running = std::min(running, pvalues[i] * static_cast<double>(k) / static_cast<double>(r + 1));
        adj[i] = running;
    }
    return adj;
}

Eigen::MatrixXd PcaProjection::reconstruct() const
{
    return (scores * components.transpose()).rowwise() + mean.transpose();
}

PcaProjection pca_project(const Eigen::MatrixXd& data, Eigen::Index m)
{
    if (data.rows() < 2 || m < 1 || m > data.cols())
        throw Error(ErrorKind::Config, "pca_project needs rows >= 2 and 1 <= m <= columns");
    PcaProjection out;
    out.mean = data.colwise().mean().transpose();
    const Eigen::MatrixXd centred = data.rowwise() - out.mean.transpose();
    const Eigen::MatrixXd cov = centred.transpose() * centred / static_cast<double>(data.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw Error(ErrorKind::Numerical, "covariance eigendecomposition failed");

    // eigenvalues come ascending
    const SeriesXd values = eig.eigenvalues().reverse();
    const Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
    const double cutoff = std::max(values(0), 0.0) * 1e-12 * static_cast<double>(data.cols());
    Eigen::Index available = 0;
    while (available < values.size() && values(available) > cutoff) ++available;
    if (available < m) {
        spdlog::warn("pca_project: only {} of {} requested components have nonzero variance", available, m);
        out.rank_deficient = true;
        m = std::max<Eigen::Index>(available, 1);
    }
    out.components = vectors.leftCols(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Eigen::Index arg = 0;
        out.components.col(j).cwiseAbs().maxCoeff(&arg);
        if (out.components(arg, j) < 0.0) out.components.col(j) *= -1.0;
    }
    out.explained_variance = values.head(m);
    out.scores = centred * out.components;
    return out;
}

SffsResult sffs(const std::vector<std::string>& candidates, const SubsetObjective& objective, std::size_t max_size,
                std::size_t jobs)
{
    if (candidates.empty()) throw Error(ErrorKind::Config, "sffs needs at least one candidate");
    SffsResult result;
    const std::size_t n = candidates.size();
    max_size = std::min(max_size, n);

    auto names_of = [&](const std::vector<bool>& in) {
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i)
            if (in[i]) names.push_back(candidates[i]);
        return names;
    };
    auto evaluate = [&](const std::vector<std::string>& subset, std::string& warning) {
        try {
            const double s = objective(subset);
            if (std::isnan(s)) throw Error(ErrorKind::Numerical, "objective returned NaN");
            return s;
        } catch (const std::exception& e) {
            warning = "objective failed on {";
            for (std::size_t i = 0; i < subset.size(); ++i) warning += (i ? "," : "") + subset[i];
            warning += "}: " + std::string(e.what());
            return kFailedScore;
        }
    };
    // Scores the subsets obtained by toggling each index in `moves`, in parallel.
    auto scan = [&](const std::vector<bool>& in, const std::vector<std::size_t>& moves) {
        std::vector<double> scores(moves.size());
        std::vector<std::string> warnings(moves.size());
        std::vector<std::vector<std::string>> subsets(moves.size());
        for (std::size_t m = 0; m < moves.size(); ++m) {
            auto next = in;
            next[moves[m]] = !next[moves[m]];
            subsets[m] = names_of(next);
        }
        parallel_for(moves.size(), jobs, [&](std::size_t m) { scores[m] = evaluate(subsets[m], warnings[m]); });
        std::size_t best = 0;
        for (std::size_t m = 1; m < moves.size(); ++m)
            if (better_subset(scores[m], subsets[m], scores[best], subsets[best])) best = m;
        for (auto& w : warnings)
            if (!w.empty()) {
                spdlog::warn("sffs: {}", w);
                result.warnings.push_back(std::move(w));
            }
        return std::pair{moves[best], scores[best]};
    };

    std::vector<bool> in(n, false);
    std::size_t size = 0;
    std::string warning;
    double current = evaluate({}, warning);
    if (!warning.empty()) result.warnings.push_back(warning);
    result.trace.push_back({SffsAction::Start, {}, {}, current});

    while (size < max_size) {
        std::vector<std::size_t> adds;
        for (std::size_t i = 0; i < n; ++i)
            if (!in[i]) adds.push_back(i);
        if (adds.empty()) break;
        const auto [added, add_score] = scan(in, adds);
        if (!(add_score > current)) break;
        in[added] = true;
        ++size;
        current = add_score;
        result.trace.push_back({SffsAction::Include, candidates[added], names_of(in), current});

        while (size > 1) {
            std::vector<std::size_t> drops;
            for (std::size_t i = 0; i < n; ++i)
                if (in[i] && i != added) drops.push_back(i);
            if (drops.empty()) break;
            const auto [dropped, drop_score] = scan(in, drops);
            if (!(drop_score > current)) break;
            in[dropped] = false;
            --size;
            current = drop_score;
            result.trace.push_back({SffsAction::Exclude, candidates[dropped], names_of(in), current});
        }
    }

    const SffsStep* best = &result.trace.front();
    for (const auto& step : result.trace)
        if (better_subset(step.score, step.subset, best->score, best->subset)) best = &step;
    result.subset = best->subset;
    result.score = best->score;
    return result;
}

const AnovaRow& SelectionReport::row(const std::string& feature) const
{
    auto it = std::find_if(anova.begin(), anova.end(), [&](const AnovaRow& r) { return r.feature == feature; });
    if (it == anova.end()) throw Error(ErrorKind::FeatureMismatch, "no ANOVA row for " + feature);
    return *it;
}

SelectionReport rank_and_filter(const FeatureMatrix& matrix, double alpha)
{
    SelectionReport report;
    report.alpha = alpha;

    std::array<std::vector<Eigen::Index>, kNumClasses> members;
    for (std::size_t r = 0; r < matrix.rows.size(); ++r)
        members[static_cast<std::size_t>(class_index(matrix.rows[r].label))].push_back(static_cast<Eigen::Index>(r));
    std::vector<std::size_t> present;
    for (std::size_t c = 0; c < kNumClasses; ++c)
        if (!members[c].empty()) present.push_back(c);
    if (present.size() < 2) throw Error(ErrorKind::TooFewGroups, "rank_and_filter needs at least 2 classes");

    const auto cols = static_cast<std::size_t>(matrix.values.cols());
    report.anova.resize(cols);
    std::vector<SeriesXd> groups(present.size());
    for (std::size_t j = 0; j < cols; ++j) {
        for (std::size_t g = 0; g < present.size(); ++g)
            groups[g] = matrix.values(members[present[g]], static_cast<Eigen::Index>(j));
        auto& row = report.anova[j];
        row.feature = matrix.columns[j];
        try {
            const auto t = anova_f(groups);
            row.f = t.f;
            row.p = t.p;
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::DegenerateGroups) throw;
            row.f = 0.0;
            row.p = 1.0;
            row.degenerate = true;
            report.warnings.push_back("degenerate feature " + row.feature + " assigned p = 1");
        }
    }

    std::vector<double> p(cols);
    for (std::size_t j = 0; j < cols; ++j) p[j] = report.anova[j].p;
    const auto adj = fdr_adjust(p);
    for (std::size_t j = 0; j < cols; ++j) report.anova[j].p_adj = adj[j];

    std::vector<std::size_t> order(cols);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = report.anova[a];
        const auto& rb = report.anova[b];
        if (ra.p != rb.p) return ra.p < rb.p;
        if (ra.f != rb.f) return ra.f > rb.f;
        return a < b;
    });
    for (std::size_t r = 0; r < cols; ++r) {
        auto& row = report.anova[order[r]];
        row.rank = static_cast<int>(r + 1);
        if (alpha >= 1.0 || row.p < alpha) report.significant.push_back(row.feature);
    }
    return report;
}

std::string selection_report_json(const SelectionReport& report)
{
    using nlohmann::json;
    json anova = json::array();
    for (const auto& r : report.anova)
        anova.push_back({{"feature", r.feature}, {"F", finite_or_null(r.f)}, {"p", r.p}, {"p_adj", r.p_adj},
                         {"rank", r.rank}, {"degenerate", r.degenerate}});
    json trace = json::array();
    for (const auto& s : report.sffs.trace)
        trace.push_back({{"action", action_name(s.action)}, {"feature", s.feature}, {"subset", s.subset},
                         {"score", finite_or_null(s.score)}});
    json doc = {
        {"schema_version", 1},
        {"thresholds", {{"alpha", report.alpha}, {"fdr_stage", report.fdr_stage}, {"fdr_threshold", report.fdr_threshold}}},
        {"significant_count", report.significant.size()},
        {"significant", report.significant},
        {"fdr_survivors", report.fdr_survivors},
        {"anova", anova},
        {"sffs_trace", trace},
        {"final_subset", report.sffs.subset},
        {"final_score", finite_or_null(report.sffs.score)},
        {"warnings", report.warnings},
        {"sffs_warnings", report.sffs.warnings},
    };
    return doc.dump(2) + "\n";
}

std::string selection_report_csv(const SelectionReport& report)
{
    std::string out = "feature,F,p,p_adj,selected\n";
    for (const auto& r : report.anova) {
        const bool selected = std::find(report.sffs.subset.begin(), report.sffs.subset.end(), r.feature) != report.sffs.subset.end();
        out += r.feature + ',' + (std::isfinite(r.f) ? io::format_double(r.f) : std::string("inf")) + ',' +
               io::format_double(r.p) + ',' + io::format_double(r.p_adj) + ',' + (selected ? "1" : "0") + '\n';
    }
    return out;
}

SelectionReport parse_selection_report_json(std::string_view text)
{
    const auto doc = nlohmann::json::parse(text);
    auto number_or = [](const nlohmann::json& j, double fallback) { return j.is_null() ? fallback : j.get<double>(); };
    SelectionReport r;
    const auto& th = doc.at("thresholds");
    r.alpha = th.at("alpha").get<double>();
    r.fdr_stage = th.at("fdr_stage").get<bool>();
    r.fdr_threshold = th.at("fdr_threshold").get<double>();
    r.significant = doc.at("significant").get<std::vector<std::string>>();
    r.fdr_survivors = doc.at("fdr_survivors").get<std::vector<std::string>>();
    for (const auto& a : doc.at("anova")) {
        AnovaRow row;
        row.feature = a.at("feature").get<std::string>();
        row.f = number_or(a.at("F"), std::numeric_limits<double>::infinity());
        row.p = a.at("p").get<double>();
        row.p_adj = a.at("p_adj").get<double>();
        row.rank = a.at("rank").get<int>();
        row.degenerate = a.at("degenerate").get<bool>();
        r.anova.push_back(std::move(row));
    }
    for (const auto& t : doc.at("sffs_trace")) {
        SffsStep step;
        const auto action = t.at("action").get<std::string>();
        step.action = action == "include" ? SffsAction::Include : action == "exclude" ? SffsAction::Exclude : SffsAction::Start;
        step.feature = t.at("feature").get<std::string>();
        step.subset = t.at("subset").get<std::vector<std::string>>();
        step.score = number_or(t.at("score"), kFailedScore);
        r.sffs.trace.push_back(std::move(step));
    }
    r.sffs.subset = doc.at("final_subset").get<std::vector<std::string>>();
    r.sffs.score = number_or(doc.at("final_score"), kFailedScore);
    r.warnings = doc.at("warnings").get<std::vector<std::string>>();
    r.sffs.warnings = doc.at("sffs_warnings").get<std::vector<std::string>>();
    return r;
}

}  // namespace ftap
