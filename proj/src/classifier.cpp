#include "privpol/classifier.hpp"

#include <numeric>

#include "privpol/rng.hpp"

namespace privpol {

void validate(const TrainConfig& cfg) {
    if (!(cfg.learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
    if (cfg.batch_size == 0) throw std::invalid_argument("batch_size must be positive");
    if (cfg.epochs == 0) throw std::invalid_argument("epochs must be positive");
    if (!(cfg.l2 >= 0)) throw std::invalid_argument("l2 must be non-negative");
}

void Dataset::append(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y) {
    if (features.rows() == 0 && features.cols() == 0) features.resize(0, x.size());
    if (x.size() != features.cols()) throw std::invalid_argument("Dataset::append: dimension mismatch");
    features.conservativeResize(features.rows() + 1, Eigen::NoChange);
    features.row(features.rows() - 1) = x;
    labels.conservativeResize(labels.size() + 1);
    labels(labels.size() - 1) = y;
}

Eigen::VectorXd featurize(const Segment& segment, const WordEmbedding& emb) {
    auto centroid = sentence_centroid(emb, tokenize(segment.text));
    if (!centroid) throw Unfeaturizable();
    return std::move(*centroid);
}

LinearModel train(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed) {
    validate(cfg);
    if (data.size() == 0) throw std::invalid_argument("train: empty dataset");

    const auto n = data.size();
    const auto d = static_cast<Eigen::Index>(data.dim());
    LinearModel model = LinearModel::zeros(data.dim());
    model.hyper = cfg;
    model.train_seed = seed;

    Eigen::VectorXd m_w = Eigen::VectorXd::Zero(d), v_w = Eigen::VectorXd::Zero(d);
    double m_b = 0, v_b = 0;
    std::vector<Eigen::Index> order(n);
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    Rng rng(seed);

    std::size_t step = 0;
    Eigen::VectorXd grad_w(d);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        shuffle(order, rng);
        for (std::size_t start = 0; start < n; start += cfg.batch_size) {
            const std::size_t end = std::min(n, start + cfg.batch_size);
            const double bs = static_cast<double>(end - start);

            grad_w.setZero();
            double grad_b = 0.0;
            double loss = 0.0;
            for (std::size_t k = start; k < end; ++k) {
                const auto row = data.features.row(order[k]);
                const double y = data.labels(order[k]);
                const double z = row.dot(model.weights) + model.bias;
                const double p = sigmoid(z);
                // log(1 + e^-|z|) form keeps the loss finite for saturated z
                loss += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
                grad_w += (p - y) * row.transpose();
                grad_b += p - y;
            }
            loss = loss / bs + cfg.l2 * model.weights.squaredNorm();
            ++step;
            if (!std::isfinite(loss)) throw TrainingDiverged(step);
            grad_w = grad_w / bs + 2.0 * cfg.l2 * model.weights;
            grad_b /= bs;

            if (cfg.optimizer == OptimizerKind::sgd) {
                model.weights -= cfg.learning_rate * grad_w;
                model.bias -= cfg.learning_rate * grad_b;
            } else {
                m_w = cfg.beta1 * m_w + (1 - cfg.beta1) * grad_w;
                v_w = cfg.beta2 * v_w + (1 - cfg.beta2) * grad_w.cwiseProduct(grad_w);
                m_b = cfg.beta1 * m_b + (1 - cfg.beta1) * grad_b;
                v_b = cfg.beta2 * v_b + (1 - cfg.beta2) * grad_b * grad_b;
                const double c1 = 1 - std::pow(cfg.beta1, static_cast<double>(step));
                const double c2 = 1 - std::pow(cfg.beta2, static_cast<double>(step));
                model.weights.array() -= cfg.learning_rate * (m_w.array() / c1) / ((v_w.array() / c2).sqrt() + cfg.adam_epsilon);
                model.bias -= cfg.learning_rate * (m_b / c1) / (std::sqrt(v_b / c2) + cfg.adam_epsilon);
            }
            if (!model.weights.allFinite() || !std::isfinite(model.bias)) throw TrainingDiverged(step);
        }
    }
    return model;
}

double predict_one(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature) {
    if (feature.size() != model.weights.size()) throw std::invalid_argument("predict_one: dimension mismatch");
    return sigmoid(model.weights.dot(feature) + model.bias);
}

Eigen::VectorXd predict_proba(const LinearModel& model, const RowMatrix& features) {
    if (features.rows() > 0 && features.cols() != model.weights.size()) throw std::invalid_argument("predict_proba: dimension mismatch");
    Eigen::VectorXd z = features * model.weights;
    return z.unaryExpr([&](double v) { return sigmoid(v + model.bias); });
}

double mcc(const ConfusionMatrix& cm) {
    const double tp = static_cast<double>(cm.tp), tn = static_cast<double>(cm.tn);
    const double fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    if (denom == 0.0) return 0.0;
    return (tp * tn - fp * fn) / std::sqrt(denom);
}

Evaluation metrics_from(const ConfusionMatrix& cm) {
    Evaluation e;
    e.confusion = cm;
    const double tp = static_cast<double>(cm.tp), fp = static_cast<double>(cm.fp), fn = static_cast<double>(cm.fn);
    const double total = static_cast<double>(cm.total());
    e.accuracy = total > 0 ? static_cast<double>(cm.tp + cm.tn) / total : 0.0;
    e.precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    e.recall = tp + fn > 0 ? tp / (tp + fn) : 0.0;
    e.f1 = e.precision + e.recall > 0 ? 2 * e.precision * e.recall / (e.precision + e.recall) : 0.0;
    e.mcc = mcc(cm);
    return e;
}

Evaluation evaluate(const LinearModel& model, const Dataset& test, double threshold) {
    if (test.size() == 0) throw std::invalid_argument("evaluate: empty test set");
    const Eigen::VectorXd p = predict_proba(model, test.features);
    ConfusionMatrix cm;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        const bool predicted = p(i) >= threshold;
        const bool actual = test.labels(i) > 0.5;
        if (predicted && actual) ++cm.tp;
        else if (predicted) ++cm.fp;
        else if (actual) ++cm.fn;
        else ++cm.tn;
    }
    return metrics_from(cm);
}

}  // namespace privpol
