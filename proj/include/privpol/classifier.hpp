#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "privpol/embedding.hpp"
#include "privpol/segmenter.hpp"

namespace privpol {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t batch_size = 20;
    std::size_t epochs = 4;
    double l2 = 1e-4;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
};

/// Throws std::invalid_argument naming the offending field.
void validate(const TrainConfig& cfg);

/// Logistic model: P(collect | x) = sigmoid(weights . x + bias).
struct LinearModel {
    Eigen::VectorXd weights;
    double bias = 0.0;
    TrainConfig hyper;
    std::uint64_t train_seed = 0;

    std::size_t dim() const { return static_cast<std::size_t>(weights.size()); }

    static LinearModel zeros(std::size_t dim) {
        LinearModel m;
        m.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
        return m;
    }
};

/// Feature rows with 0/1 labels.
struct Dataset {
    RowMatrix features;
    Eigen::VectorXd labels;

    std::size_t size() const { return static_cast<std::size_t>(features.rows()); }
    std::size_t dim() const { return static_cast<std::size_t>(features.cols()); }

    void append(const Eigen::Ref<const Eigen::RowVectorXd>& x, double y);
};

class TrainingDiverged : public std::runtime_error {
public:
    explicit TrainingDiverged(std::size_t step)
        : std::runtime_error("diverged at step " + std::to_string(step)), step_(step) {}
    std::size_t step() const { return step_; }

private:
    std::size_t step_;
};

class Unfeaturizable : public std::invalid_argument {
public:
    Unfeaturizable() : std::invalid_argument("unfeaturizable") {}
};

/// Mean embedding of the in-vocabulary tokens of the segment text.
Eigen::VectorXd featurize(const Segment& segment, const WordEmbedding& emb);

template <typename Scalar>
Scalar sigmoid(Scalar z) {
    if (z >= Scalar(0)) return Scalar(1) / (Scalar(1) + std::exp(-z));
    const Scalar e = std::exp(z);
    return e / (Scalar(1) + e);
}

/// Minibatch training of mean binary cross-entropy + l2 * |w|^2 from a zero
/// start. Batch order is reshuffled each epoch from `seed`.
LinearModel train(const Dataset& data, const TrainConfig& cfg, std::uint64_t seed);

double predict_one(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& feature);
/// Row-wise probabilities.
Eigen::VectorXd predict_proba(const LinearModel& model, const RowMatrix& features);

struct ConfusionMatrix {
    std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
    std::size_t total() const { return tp + tn + fp + fn; }
};

/// Matthews correlation; 0 when any marginal is empty.
double mcc(const ConfusionMatrix& cm);

struct Evaluation {
    ConfusionMatrix confusion;
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, mcc = 0;
};

Evaluation metrics_from(const ConfusionMatrix& cm);
Evaluation evaluate(const LinearModel& model, const Dataset& test, double threshold = 0.5);

}  // namespace privpol
