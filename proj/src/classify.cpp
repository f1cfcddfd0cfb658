#include "ftap/classify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

#include "ftap/io.hpp"
#include "ftap/parallel.hpp"

namespace ftap {

namespace {

constexpr double kTau = 1e-12;  // curvature floor for indefinite kernels
constexpr double kInf = std::numeric_limits<double>::infinity();

long iteration_cap(Eigen::Index n)
{
    const double nn = static_cast<double>(n);
    const double budget = (kMaxKernelEvaluations - nn * nn) / (2.0 * nn);
    return std::max<long>(1, static_cast<long>(budget));
}

// Uniform double in [0, 1) from the top 53 bits; fixed across standard libraries.
double unit_uniform(std::mt19937_64& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double log_uniform(std::mt19937_64& rng, double lo, double hi)
{
    return std::exp(std::log(lo) + unit_uniform(rng) * (std::log(hi) - std::log(lo)));
}

ClassScores softmax_present(const ClassScores& margins, const std::vector<Label>& present)
{
    ClassScores out{};
    double top = -kInf;
    for (auto l : present) top = std::max(top, margins[static_cast<std::size_t>(class_index(l))]);
    double total = 0.0;
    for (auto l : present) {
        const auto i = static_cast<std::size_t>(class_index(l));
        out[i] = std::exp(margins[i] - top);
        total += out[i];
    }
    for (auto& v : out) v /= total;
    return out;
}

std::vector<Label> present_classes(const std::vector<Label>& y)
{
    std::vector<Label> classes;
    for (auto l : kClassOrder)
        if (std::find(y.begin(), y.end(), l) != y.end()) classes.push_back(l);
    return classes;
}

ClassScores class_frequencies(const std::vector<Label>& y)
{
    ClassScores out{};
    for (auto l : y) out[static_cast<std::size_t>(class_index(l))] += 1.0;
    for (auto& v : out) v /= static_cast<double>(y.size());
    return out;
}

SvmModel train_svm_with_gram(const Eigen::MatrixXd& x, const std::vector<Label>& y, const Hyperparams& hp,
                             const Eigen::MatrixXd& gram)
{
    SvmModel model;
    model.hp = hp;
    model.classes = present_classes(y);
    if (model.classes.size() < 2) throw Error(ErrorKind::TooFewGroups, "train_svm needs at least 2 classes");
    model.scaler.mean = SeriesXd::Zero(x.cols());
    model.scaler.scale = SeriesXd::Ones(x.cols());

    for (std::size_t a = 0; a < model.classes.size(); ++a) {
        for (std::size_t b = a + 1; b < model.classes.size(); ++b) {
            std::vector<Eigen::Index> idx;
            std::vector<double> sign;
            for (std::size_t r = 0; r < y.size(); ++r) {
                if (y[r] == model.classes[a] || y[r] == model.classes[b]) {
                    idx.push_back(static_cast<Eigen::Index>(r));
                    sign.push_back(y[r] == model.classes[a] ? 1.0 : -1.0);
                }
            }
            const SeriesXd ys = Eigen::Map<const SeriesXd>(sign.data(), static_cast<Eigen::Index>(sign.size()));
            const Eigen::MatrixXd sub = gram(idx, idx);
            const auto sol = solve_binary_svm(sub, ys, hp.c);

            PairwiseMachine m;
            m.positive = model.classes[a];
            m.negative = model.classes[b];
            m.rho = sol.rho;
            std::vector<Eigen::Index> sv;
            for (Eigen::Index i = 0; i < sol.alpha.size(); ++i)
                if (sol.alpha(i) > 0.0) sv.push_back(i);
            m.support.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
            m.coef.resize(static_cast<Eigen::Index>(sv.size()));
            for (std::size_t s = 0; s < sv.size(); ++s) {
                const auto i = sv[s];
                m.support.row(static_cast<Eigen::Index>(s)) = x.row(idx[static_cast<std::size_t>(i)]);
                m.coef(static_cast<Eigen::Index>(s)) = ys(i) * sol.alpha(i);
            }
            model.machines.push_back(std::move(m));
        }
    }
    return model;
}

}  // namespace

std::string_view to_string(Kernel k)
{
    return k == Kernel::RBF ? "rbf" : "sigmoid";
}

void Hyperparams::validate() const
{
    if (!(c >= kParamMin && c <= kParamMax)) throw Error(ErrorKind::Config, "C outside [0.01, 100]");
    if (!(gamma >= kParamMin && gamma <= kParamMax)) throw Error(ErrorKind::Config, "gamma outside [0.01, 100]");
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Kernel kernel, double gamma)
{
    const Eigen::MatrixXd dots = a * b.transpose();
    if (kernel == Kernel::Sigmoid) return (gamma * dots.array()).tanh().matrix();
    const SeriesXd na = a.rowwise().squaredNorm();
    const SeriesXd nb = b.rowwise().squaredNorm();
    Eigen::MatrixXd d2 = (-2.0 * dots).colwise() + na;
    d2.rowwise() += nb.transpose();
    return (-gamma * d2.array().max(0.0)).exp().matrix();
}

Eigen::MatrixXd Standardizer::apply(const Eigen::MatrixXd& rows) const
{
    return ((rows.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array()).matrix();
}

Eigen::MatrixXd Standardizer::inverse(const Eigen::MatrixXd& rows) const
{
    return ((rows.array().rowwise() * scale.transpose().array()).rowwise() + mean.transpose().array()).matrix();
}

Standardizer standardize_fit(const Eigen::MatrixXd& train)
{
    if (train.rows() < 2) throw Error(ErrorKind::Config, "standardize_fit needs at least 2 rows");
    Standardizer s;
    s.mean = train.colwise().mean().transpose();
    s.scale = ((train.rowwise() - s.mean.transpose()).array().square().colwise().mean().sqrt()).transpose();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
    return s;
}

BinarySolution solve_binary_svm(const Eigen::MatrixXd& gram, const SeriesXd& y, double c, double tolerance)
{
    const Eigen::Index n = y.size();
    const Eigen::MatrixXd q = (y * y.transpose()).cwiseProduct(gram);
    const SeriesXd qd = q.diagonal();
    BinarySolution s{SeriesXd::Zero(n), 0.0, 0};
    SeriesXd& alpha = s.alpha;
    SeriesXd grad = SeriesXd::Constant(n, -1.0);
    const long cap = iteration_cap(n);

    auto in_up = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) < c : alpha(t) > 0.0; };
    auto in_low = [&](Eigen::Index t) { return y(t) > 0 ? alpha(t) > 0.0 : alpha(t) < c; };

    while (true) {
        // working set: maximal violating pair with second-order choice of j
        double gmax = -kInf;
        Eigen::Index i = -1;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (in_up(t) && -y(t) * grad(t) >= gmax) {
                gmax = -y(t) * grad(t);
                i = t;
            }
        }
        double gmax2 = -kInf;
        Eigen::Index j = -1;
        double best_obj = kInf;
        for (Eigen::Index t = 0; t < n && i >= 0; ++t) {
            if (!in_low(t)) continue;
            const double yg = y(t) * grad(t);
            gmax2 = std::max(gmax2, yg);
            const double grad_diff = gmax + yg;
            if (grad_diff > 0.0) {
                double quad = qd(i) + qd(t) - 2.0 * y(i) * y(t) * q(i, t);
                if (quad <= 0.0) quad = kTau;
                const double obj = -(grad_diff * grad_diff) / quad;
                if (obj <= best_obj) {
                    best_obj = obj;
                    j = t;
                }
            }
        }
        if (i < 0 || j < 0 || gmax + gmax2 < tolerance) break;
        if (++s.iterations > cap) throw SolverNonconvergence("SMO iteration cap reached", s);

        const double old_i = alpha(i), old_j = alpha(j);
        if (y(i) != y(j)) {
            double quad = qd(i) + qd(j) + 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += delta;
            alpha(j) += delta;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = diff; }
            } else {
                if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = -diff; }
            }
            if (diff > 0.0) {
                if (alpha(i) > c) { alpha(i) = c; alpha(j) = c - diff; }
            } else {
                if (alpha(j) > c) { alpha(j) = c; alpha(i) = c + diff; }
            }
        } else {
            double quad = qd(i) + qd(j) - 2.0 * q(i, j);
            if (quad <= 0.0) quad = kTau;
            const double delta = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= delta;
            alpha(j) += delta;
            if (sum > c) {
                if (alpha(i) > c) { alpha(i) = c; alpha(j) = sum - c; }
            } else {
                if (alpha(j) < 0.0) { alpha(j) = 0.0; alpha(i) = sum; }
            }
            if (sum > c) {
                if (alpha(j) > c) { alpha(j) = c; alpha(i) = sum - c; }
            } else {
                if (alpha(i) < 0.0) { alpha(i) = 0.0; alpha(j) = sum; }
            }
        }
        grad += q.col(i) * (alpha(i) - old_i) + q.col(j) * (alpha(j) - old_j);
    }

    // bias from free vectors, else midpoint of the feasible interval
    double ub = kInf, lb = -kInf, sum_free = 0.0;
    int free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        const double yg = y(t) * grad(t);
        if (alpha(t) >= c) {
            if (y(t) < 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha(t) <= 0.0) {
            if (y(t) > 0) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++free;
            sum_free += yg;
        }
    }
    s.rho = free > 0 ? sum_free / free : 0.5 * (ub + lb);
    return s;
}

double max_kkt_violation(const Eigen::MatrixXd& gram, const SeriesXd& y, const SeriesXd& alpha, double c)
{
    const SeriesXd grad = (y * y.transpose()).cwiseProduct(gram) * alpha - SeriesXd::Ones(y.size());
    double up = -kInf, low = kInf;
    for (Eigen::Index t = 0; t < y.size(); ++t) {
        const double v = -y(t) * grad(t);
        const bool is_up = y(t) > 0 ? alpha(t) < c : alpha(t) > 0.0;
        const bool is_low = y(t) > 0 ? alpha(t) > 0.0 : alpha(t) < c;
        if (is_up) up = std::max(up, v);
        if (is_low) low = std::min(low, v);
    }
    if (!std::isfinite(up) || !std::isfinite(low)) return 0.0;
    return std::max(0.0, up - low);
}

double SvmModel::decision(const PairwiseMachine& m, const Eigen::Ref<const SeriesXd>& row) const
{
    if (m.support.rows() == 0) return -m.rho;
    const SeriesXd k = kernel_matrix(m.support, row.transpose(), hp.kernel, hp.gamma).col(0);
    return m.coef.dot(k) - m.rho;
}

SvmModel train_svm(const Eigen::MatrixXd& x, const std::vector<Label>& y, const Hyperparams& hp)
{
    hp.validate();
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::LengthMismatch, "train_svm: rows and labels differ");
    if (x.rows() < 4) throw Error(ErrorKind::Config, "train_svm needs at least 4 rows");
    return train_svm_with_gram(x, y, hp, kernel_matrix(x, x, hp.kernel, hp.gamma));
}

SvmModel fit_svm(const Eigen::MatrixXd& x, const std::vector<Label>& y, const Hyperparams& hp,
                 std::vector<std::string> features)
{
    const auto scaler = standardize_fit(x);
    auto model = train_svm(scaler.apply(x), y, hp);
    model.scaler = scaler;
    model.features = std::move(features);
    return model;
}

Label argmax_class(const ClassScores& scores)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < scores.size(); ++i)
        if (scores[i] > scores[best]) best = i;
    return label_from_index(static_cast<int>(best));
}

ClassScores predict_proba(const SvmModel& model, const Eigen::Ref<const SeriesXd>& raw_row)
{
    if (raw_row.size() != model.scaler.mean.size())
        throw Error(ErrorKind::FeatureMismatch, "predict_proba: row has " + std::to_string(raw_row.size()) +
                                                    " features, model expects " + std::to_string(model.scaler.mean.size()));
    const SeriesXd row = ((raw_row - model.scaler.mean).array() / model.scaler.scale.array()).matrix();
    ClassScores margins{};
    for (const auto& m : model.machines) {
        const double d = model.decision(m, row);
        margins[static_cast<std::size_t>(class_index(m.positive))] += d;
        margins[static_cast<std::size_t>(class_index(m.negative))] -= d;
    }
    return softmax_present(margins, model.classes);
}

std::vector<ClassScores> predict_proba_rows(const SvmModel& model, const Eigen::MatrixXd& raw_rows)
{
    std::vector<ClassScores> out;
    out.reserve(static_cast<std::size_t>(raw_rows.rows()));
    for (Eigen::Index r = 0; r < raw_rows.rows(); ++r) out.push_back(predict_proba(model, SeriesXd(raw_rows.row(r).transpose())));
    return out;
}

KnnModel train_knn(const Eigen::MatrixXd& x, const std::vector<Label>& y, int k)
{
    if (k < 1 || k > x.rows()) throw Error(ErrorKind::Config, "train_knn: k must be in [1, rows]");
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw Error(ErrorKind::LengthMismatch, "train_knn: rows and labels differ");
    KnnModel m;
    m.k = k;
    m.scaler = x.rows() >= 2 ? standardize_fit(x) : Standardizer{SeriesXd::Zero(x.cols()), SeriesXd::Ones(x.cols())};
    m.train = m.scaler.apply(x);
    m.labels = y;
    return m;
}

ClassScores predict_knn(const KnnModel& model, const Eigen::Ref<const SeriesXd>& raw_row)
{
    if (raw_row.size() != model.train.cols()) throw Error(ErrorKind::FeatureMismatch, "predict_knn: feature count mismatch");
    const SeriesXd row = ((raw_row - model.scaler.mean).array() / model.scaler.scale.array()).matrix();
    const SeriesXd dist = (model.train.rowwise() - row.transpose()).rowwise().squaredNorm();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(dist.size()));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) { return dist(a) < dist(b); });
    ClassScores votes{};
    for (int i = 0; i < model.k; ++i)
        votes[static_cast<std::size_t>(class_index(model.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]))] += 1.0;
    for (auto& v : votes) v /= static_cast<double>(model.k);
    return votes;
}

SearchResult hyperparameter_search(const std::function<double(const Hyperparams&)>& objective, const SearchConfig& cfg,
                                   std::size_t jobs)
{
    if (cfg.trials < 1) throw Error(ErrorKind::Config, "search needs at least one trial");
    std::mt19937_64 rng(cfg.seed);
    SearchResult result;
    result.trials.resize(static_cast<std::size_t>(cfg.trials));
    for (auto& t : result.trials) {
        t.hp.kernel = unit_uniform(rng) < 0.5 ? Kernel::RBF : Kernel::Sigmoid;
        t.hp.c = log_uniform(rng, kParamMin, kParamMax);
        t.hp.gamma = log_uniform(rng, kParamMin, kParamMax);
    }
    parallel_for(result.trials.size(), jobs, [&](std::size_t i) {
        double s = -kInf;
        try {
            s = objective(result.trials[i].hp);
        } catch (const std::exception&) {
            s = -kInf;
        }
        result.trials[i].score = std::isnan(s) ? -kInf : s;
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.trials.size(); ++i)
        if (result.trials[i].score > result.trials[best].score) best = i;
    result.best = result.trials[best].hp;
    result.best_score = result.trials[best].score;
    return result;
}

std::vector<Prediction> loso_cv(const FeatureMatrix& matrix, const std::vector<std::string>& subset,
                                const ClassifierSpec& spec, std::size_t jobs)
{
    if (spec.kind == ClassifierKind::Svm) spec.hp.validate();
    const auto n = matrix.rows.size();
    // Canonical row order keeps results independent of the matrix's trial ordering.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const auto& ra = matrix.rows[a];
        const auto& rb = matrix.rows[b];
        return std::tie(ra.person_id, ra.trial_id) < std::tie(rb.person_id, rb.trial_id);
    });
    std::vector<std::string> subjects;
    for (auto r : order)
        if (subjects.empty() || subjects.back() != matrix.rows[r].person_id) subjects.push_back(matrix.rows[r].person_id);

    std::vector<Label> all_labels;
    for (const auto& r : matrix.rows) all_labels.push_back(r.label);
    const auto classes = present_classes(all_labels);
    const Eigen::MatrixXd x = subset.empty() ? Eigen::MatrixXd(static_cast<Eigen::Index>(n), 0) : matrix.select(subset);

    std::vector<Prediction> predictions(n);
    parallel_for(subjects.size(), jobs, [&](std::size_t s) {
        std::vector<Eigen::Index> train_idx, test_idx;
        std::vector<Label> train_y;
        for (auto r : order) {
            if (matrix.rows[r].person_id == subjects[s]) {
                test_idx.push_back(static_cast<Eigen::Index>(r));
            } else {
                train_idx.push_back(static_cast<Eigen::Index>(r));
                train_y.push_back(matrix.rows[r].label);
            }
        }
        if (present_classes(train_y).size() != classes.size())
            throw Error(ErrorKind::ClassMissingInFold, "holding out subject " + subjects[s] + " removes a class from training");
        const Eigen::MatrixXd train = x(train_idx, Eigen::all);

        std::function<ClassScores(const SeriesXd&)> predict;
        SvmModel svm;
        KnnModel knn;
        if (subset.empty()) {
            const auto prior = class_frequencies(train_y);
            predict = [prior](const SeriesXd&) { return prior; };
        } else if (spec.kind == ClassifierKind::Svm) {
            svm = fit_svm(train, train_y, spec.hp, subset);
            predict = [&svm](const SeriesXd& row) { return predict_proba(svm, row); };
        } else {
            knn = train_knn(train, train_y, spec.k);
            predict = [&knn](const SeriesXd& row) { return predict_knn(knn, row); };
        }
        for (auto r : test_idx) {
            auto& p = predictions[static_cast<std::size_t>(r)];
            const auto& info = matrix.rows[static_cast<std::size_t>(r)];
            p.person_id = info.person_id;
            p.trial_id = info.trial_id;
            p.truth = info.label;
            p.proba = predict(x.row(r).transpose());
            p.predicted = argmax_class(p.proba);
        }
    });
    return predictions;
}

double accuracy(const std::vector<Prediction>& predictions)
{
    if (predictions.empty()) return 0.0;
    const auto correct = std::count_if(predictions.begin(), predictions.end(),
                                       [](const Prediction& p) { return p.predicted == p.truth; });
    return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

std::string predictions_csv(const std::vector<Prediction>& predictions)
{
    std::string out = "person_id,trial_id,true,pred,p_HC,p_PD,p_PSP,p_MSA\n";
    for (const auto& p : predictions) {
        out += p.person_id + ',' + p.trial_id + ',' + std::string(to_string(p.truth)) + ',' + std::string(to_string(p.predicted));
        for (double v : p.proba) out += ',' + io::format_double(v);
        out += '\n';
    }
    return out;
}

namespace {

nlohmann::json to_json(const Eigen::MatrixXd& m)
{
    auto rows = nlohmann::json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        auto row = nlohmann::json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

nlohmann::json to_json(const SeriesXd& v)
{
    return std::vector<double>(v.data(), v.data() + v.size());
}

SeriesXd series_from(const nlohmann::json& j)
{
    const auto v = j.get<std::vector<double>>();
    return Eigen::Map<const SeriesXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Label label_from(const nlohmann::json& j)
{
    const auto l = parse_label(j.get<std::string>());
    if (!l) throw Error(ErrorKind::UnknownLabel, "model: unknown label");
    return *l;
}

}  // namespace

std::string svm_model_json(const SvmModel& model)
{
    using nlohmann::json;
    json machines = json::array();
    for (const auto& m : model.machines)
        machines.push_back({{"positive", to_string(m.positive)}, {"negative", to_string(m.negative)}, {"rho", m.rho},
                            {"coef", to_json(m.coef)}, {"support", to_json(m.support)}});
    json classes = json::array();
    for (auto l : model.classes) classes.push_back(to_string(l));
    json doc = {
        {"schema_version", 1},
        {"kernel", to_string(model.hp.kernel)},
        {"C", model.hp.c},
        {"gamma", model.hp.gamma},
        {"coef0", 0.0},
        {"features", model.features},
        {"standardization", {{"mean", to_json(model.scaler.mean)}, {"scale", to_json(model.scaler.scale)}}},
        {"classes", classes},
        {"machines", machines},
    };
    return doc.dump(2) + "\n";
}

SvmModel parse_svm_model_json(std::string_view text)
{
    const auto doc = nlohmann::json::parse(text);
    SvmModel model;
    const auto kernel = doc.at("kernel").get<std::string>();
    if (kernel != "rbf" && kernel != "sigmoid") throw Error(ErrorKind::Config, "model: unknown kernel " + kernel);
    model.hp.kernel = kernel == "rbf" ? Kernel::RBF : Kernel::Sigmoid;
    model.hp.c = doc.at("C").get<double>();
    model.hp.gamma = doc.at("gamma").get<double>();
    model.features = doc.at("features").get<std::vector<std::string>>();
    model.scaler.mean = series_from(doc.at("standardization").at("mean"));
    model.scaler.scale = series_from(doc.at("standardization").at("scale"));
    for (const auto& c : doc.at("classes")) model.classes.push_back(label_from(c));
    for (const auto& jm : doc.at("machines")) {
        PairwiseMachine m;
        m.positive = label_from(jm.at("positive"));
        m.negative = label_from(jm.at("negative"));
        m.rho = jm.at("rho").get<double>();
        m.coef = series_from(jm.at("coef"));
        const auto& sup = jm.at("support");
        m.support.resize(static_cast<Eigen::Index>(sup.size()), model.scaler.mean.size());
        for (std::size_t r = 0; r < sup.size(); ++r)
            m.support.row(static_cast<Eigen::Index>(r)) = series_from(sup[r]).transpose();
        model.machines.push_back(std::move(m));
    }
    return model;
}

}  // namespace ftap
