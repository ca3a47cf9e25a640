#pragma once

#include "ggn/activation.hpp"
#include "ggn/numerics.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace ggn {

/// Train/test split with targets stored as m x k matrices. Classification
/// sets also carry integer labels and one-hot targets.
struct Dataset {
  std::string name;
  Matrix x_train;
  Matrix y_train;
  Matrix x_test;
  Matrix y_test;
  int classes = 0;  // 0 for regression
  std::vector<int> labels_train;
  std::vector<int> labels_test;
  std::map<std::string, std::string> metadata;

  bool is_classification() const { return classes >= 2; }
  Eigen::Index input_dim() const { return x_train.cols(); }
  Eigen::Index output_dim() const { return y_train.cols(); }
  void validate() const;
};

/// Teacher network x -> sum_j v_j act(u_j . x) (no width scaling).
struct TeacherSpec {
  Matrix u;  // n* x n0
  Matrix v;  // n* x k
  Activation activation = Activation::SiLU;

  int width() const { return static_cast<int>(u.rows()); }
  /// max_j | ||v_j u_j|| - 1 | for single-output teachers.
  double normalization_error() const;
};

Matrix teacher_forward(const TeacherSpec& teacher, const Matrix& x);

/// m rows drawn uniformly on the unit sphere in R^n0.
Matrix sample_sphere(Eigen::Index m, Eigen::Index n0, std::uint64_t seed);

/// Gaussian teacher rescaled so that ||v_j u_j|| = 1 for every unit.
TeacherSpec make_teacher(int width, int n0, Activation a, std::uint64_t seed);

/// Sphere inputs labelled by the teacher. Train and test draws use
/// independent streams derived from `seed`.
Dataset gen_teacher_student(const TeacherSpec& teacher, Eigen::Index m_train, Eigen::Index m_test,
                            std::uint64_t seed);

/// Random-feature ridge model x -> sum_j v_j act(u_j . x) with fixed Gaussian u.
struct RandomFeatureModel {
  Matrix u;
  Vector v;
  Activation activation = Activation::SiLU;
  Vector predict(const Matrix& x) const;
};

/// Fits v = argmin (1/2m) sum (Phi_RF(x_i; v) - y_i)^2 + (lambda/2)||v||^2.
/// Throws SingularSystem at lambda = 0 when the feature Gram is singular.
RandomFeatureModel rf_target(const Matrix& x, const Vector& y, int features, double lambda,
                             Activation a, std::uint64_t seed);

// ---------------------------------------------------------------------------
// IDX files: big-endian magic (2051 images, 2049 labels), big-endian sizes,
// unsigned-byte payload.

inline constexpr std::uint32_t kIdxImageMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelMagic = 0x00000801;

struct IdxImages {
  std::uint32_t count = 0;
  std::uint32_t rows = 0;
  std::uint32_t cols = 0;
  std::vector<std::uint8_t> pixels;  // count * rows * cols
};

IdxImages read_idx_images(const std::filesystem::path& path);
std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path);
void write_idx_images(const std::filesystem::path& path, const IdxImages& images);
void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels);

/// One half (train or test) of an IDX dataset: pixels scaled to [0, 1],
/// labels one-hot encoded.
struct LabelledSet {
  Matrix x;
  Matrix y;
  std::vector<int> labels;
};

LabelledSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                     int classes = 10);

/// MNIST-layout directory (train-images-idx3-ubyte etc.). `train_limit` > 0
/// keeps only the first that many training samples.
Dataset load_mnist_dir(const std::filesystem::path& dir, const std::string& name,
                       Eigen::Index train_limit = 0);

/// Dataset root: $DATA_DIR, else ./data.
std::filesystem::path data_root();

// ---------------------------------------------------------------------------
// UCI tables: pendigits, letter, avila.

struct UciLayout {
  std::string name;
  Eigen::Index train_rows;
  Eigen::Index test_rows;
  int features;
  std::vector<std::string> classes;  // label token per class index
  bool label_first;                  // label column before the features
};

const UciLayout& uci_layout(const std::string& name);

struct UciOptions {
  bool standardize = true;
};

Dataset load_uci_csv(const std::filesystem::path& train_csv, const std::filesystem::path& test_csv,
                     const std::string& name, const UciOptions& options = {});

/// Expects <dir>/<name>.train.csv and <dir>/<name>.test.csv.
Dataset load_uci_dir(const std::filesystem::path& dir, const std::string& name,
                     const UciOptions& options = {});

// ---------------------------------------------------------------------------
// MNIST teacher-student construction.

struct MnistTeacherOptions {
  int teacher_width = 16;
  int teacher_steps = 2000;
  double teacher_lr = 1.0;
  Eigen::Index head_samples = 3000;
  Eigen::Index balanced_total = 2610;
};

struct MnistTeacherStudent {
  Dataset data;
  TeacherSpec teacher;
  double teacher_train_loss = 0.0;  // final cross-entropy
};

/// Indices (in original order) of a class-balanced subset of the first
/// `head` labels, `total / classes` per class.
std::vector<Eigen::Index> balanced_subset(const std::vector<int>& labels, Eigen::Index head,
                                          Eigen::Index total, int classes);

MnistTeacherStudent mnist_teacher_student(const Dataset& mnist, std::uint64_t seed,
                                          const MnistTeacherOptions& options = {});

/// Row-wise softmax.
Matrix softmax_rows(const Matrix& logits);

Matrix one_hot(const std::vector<int>& labels, int classes);

}  // namespace ggn
