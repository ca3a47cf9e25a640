#include "ggn/data.hpp"

#include "ggn/error.hpp"
#include "ggn/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace ggn {

void Dataset::validate() const {
  if (x_train.rows() != y_train.rows() || x_test.rows() != y_test.rows()) {
    throw DataError(name + ": input and target row counts differ");
  }
  if (x_train.cols() != x_test.cols() || y_train.cols() != y_test.cols()) {
    throw DataError(name + ": train and test column counts differ");
  }
  if (!x_train.allFinite() || !y_train.allFinite() || !x_test.allFinite() || !y_test.allFinite()) {
    throw DataError(name + ": non-finite values");
  }
  if (is_classification()) {
    if (static_cast<Eigen::Index>(labels_train.size()) != x_train.rows() ||
        static_cast<Eigen::Index>(labels_test.size()) != x_test.rows()) {
      throw DataError(name + ": label count mismatch");
    }
  }
}

double TeacherSpec::normalization_error() const {
  if (v.cols() != 1) throw ShapeError("normalization_error: single-output teachers only");
  double worst = 0.0;
  for (Eigen::Index j = 0; j < u.rows(); ++j) {
    worst = std::max(worst, std::abs(std::abs(v(j, 0)) * u.row(j).norm() - 1.0));
  }
  return worst;
}

Matrix teacher_forward(const TeacherSpec& teacher, const Matrix& x) {
  const auto hidden = kernels::hidden_layer(teacher.u, x, teacher.activation);
  return kernels::outputs(hidden, teacher.v, 1.0);
}

Matrix sample_sphere(Eigen::Index m, Eigen::Index n0, std::uint64_t seed) {
  if (m < 1 || n0 < 1) throw DomainError("sample_sphere: m and n0 must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(m, n0);
  for (Eigen::Index i = 0; i < m; ++i) {
    double norm = 0.0;
    do {
      for (Eigen::Index l = 0; l < n0; ++l) x(i, l) = normal(rng);
      norm = x.row(i).norm();
    } while (!(norm > 0.0));
    x.row(i) /= norm;
  }
  return x;
}

TeacherSpec make_teacher(int width, int n0, Activation a, std::uint64_t seed) {
  if (width < 1 || n0 < 1) throw DomainError("make_teacher: width and n0 must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  TeacherSpec t{Matrix(width, n0), Matrix(width, 1), a};
  for (int j = 0; j < width; ++j) {
    double prod = 0.0;
    do {
      for (int l = 0; l < n0; ++l) t.u(j, l) = normal(rng);
      t.v(j, 0) = normal(rng);
      prod = std::abs(t.v(j, 0)) * t.u.row(j).norm();
    } while (!(prod > 1e-12));
    const double s = 1.0 / std::sqrt(prod);
    t.u.row(j) *= s;
    t.v(j, 0) *= s;
  }
  return t;
}

Dataset gen_teacher_student(const TeacherSpec& teacher, Eigen::Index m_train, Eigen::Index m_test,
                            std::uint64_t seed) {
  std::seed_seq seq{seed, std::uint64_t{0x7e57da7a}};
  std::array<std::uint64_t, 2> streams{};
  seq.generate(streams.begin(), streams.end());
  Dataset d;
  d.name = "teacher-student";
  d.x_train = sample_sphere(m_train, teacher.u.cols(), streams[0]);
  d.x_test = sample_sphere(m_test, teacher.u.cols(), streams[1]);
  d.y_train = teacher_forward(teacher, d.x_train);
  d.y_test = teacher_forward(teacher, d.x_test);
  d.metadata["teacher_width"] = std::to_string(teacher.width());
  d.metadata["targets"] = "teacher outputs";
  d.validate();
  return d;
}

Vector RandomFeatureModel::predict(const Matrix& x) const {
  const auto hidden = kernels::hidden_layer(u, x, activation);
  return hidden.act.transpose() * v;
}

RandomFeatureModel rf_target(const Matrix& x, const Vector& y, int features, double lambda,
                             Activation a, std::uint64_t seed) {
  if (x.rows() != y.size()) throw ShapeError("rf_target: sample count mismatch");
  if (features < 1) throw DomainError("rf_target: need at least one feature");
  if (lambda < 0.0) throw DomainError("rf_target: lambda must be >= 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  RandomFeatureModel model;
  model.activation = a;
  model.u.resize(features, x.cols());
  for (Eigen::Index i = 0; i < model.u.size(); ++i) model.u.data()[i] = normal(rng);
  const Matrix z = kernels::hidden_layer(model.u, x, a).act.transpose();  // m x n
  const double inv_m = 1.0 / static_cast<double>(x.rows());
  Matrix normal_matrix = inv_m * (z.transpose() * z);
  normal_matrix.diagonal().array() += lambda;
  const Vector rhs = inv_m * (z.transpose() * y);
  try {
    model.v = numerics::solve_spd(normal_matrix, rhs);
  } catch (const NotPositiveDefinite& e) {
    throw SingularSystem(std::string("rf_target: feature Gram is singular (") + e.what() +
                         "); use lambda > 0");
  }
  return model;
}

// ---------------------------------------------------------------------------
// IDX

namespace {

std::uint32_t read_be32(std::istream& in, const std::filesystem::path& path) {
  std::array<unsigned char, 4> b{};
  in.read(reinterpret_cast<char*>(b.data()), 4);
  if (!in) throw DataError(path.string() + ": truncated IDX header");
  return (std::uint32_t{b[0]} << 24) | (std::uint32_t{b[1]} << 16) | (std::uint32_t{b[2]} << 8) |
         std::uint32_t{b[3]};
}

void write_be32(std::ostream& out, std::uint32_t v) {
  const std::array<char, 4> b{static_cast<char>((v >> 24) & 0xff), static_cast<char>((v >> 16) & 0xff),
                              static_cast<char>((v >> 8) & 0xff), static_cast<char>(v & 0xff)};
  out.write(b.data(), 4);
}

std::ifstream open_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

void expect_magic(std::uint32_t got, std::uint32_t want, const std::filesystem::path& path) {
  if (got != want) {
    std::ostringstream msg;
    msg << path.string() << ": not an IDX file (magic 0x" << std::hex << got << ", expected 0x"
        << want << ")";
    throw DataError(msg.str());
  }
}

}  // namespace

IdxImages read_idx_images(const std::filesystem::path& path) {
  auto in = open_binary(path);
  expect_magic(read_be32(in, path), kIdxImageMagic, path);
  IdxImages img;
  img.count = read_be32(in, path);
  img.rows = read_be32(in, path);
  img.cols = read_be32(in, path);
  const std::size_t n = std::size_t{img.count} * img.rows * img.cols;
  img.pixels.resize(n);
  in.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
  if (static_cast<std::size_t>(in.gcount()) != n) {
    throw DataError(path.string() + ": truncated image payload (" + std::to_string(in.gcount()) +
                    " of " + std::to_string(n) + " bytes)");
  }
  return img;
}

std::vector<std::uint8_t> read_idx_labels(const std::filesystem::path& path) {
  auto in = open_binary(path);
  expect_magic(read_be32(in, path), kIdxLabelMagic, path);
  const std::uint32_t count = read_be32(in, path);
  std::vector<std::uint8_t> labels(count);
  in.read(reinterpret_cast<char*>(labels.data()), count);
  if (static_cast<std::size_t>(in.gcount()) != count) {
    throw DataError(path.string() + ": truncated label payload (" + std::to_string(in.gcount()) +
                    " of " + std::to_string(count) + " bytes)");
  }
  return labels;
}

void write_idx_images(const std::filesystem::path& path, const IdxImages& images) {
  if (images.pixels.size() != std::size_t{images.count} * images.rows * images.cols) {
    throw ShapeError("write_idx_images: pixel count does not match header");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_be32(out, kIdxImageMagic);
  write_be32(out, images.count);
  write_be32(out, images.rows);
  write_be32(out, images.cols);
  out.write(reinterpret_cast<const char*>(images.pixels.data()),
            static_cast<std::streamsize>(images.pixels.size()));
}

void write_idx_labels(const std::filesystem::path& path, const std::vector<std::uint8_t>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_be32(out, kIdxLabelMagic);
  write_be32(out, static_cast<std::uint32_t>(labels.size()));
  out.write(reinterpret_cast<const char*>(labels.data()), static_cast<std::streamsize>(labels.size()));
}

Matrix one_hot(const std::vector<int>& labels, int classes) {
  Matrix y = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw DataError("label " + std::to_string(labels[i]) + " outside [0, " +
                      std::to_string(classes) + ")");
    }
    y(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
  }
  return y;
}

LabelledSet load_idx(const std::filesystem::path& images, const std::filesystem::path& labels,
                     int classes) {
  const IdxImages img = read_idx_images(images);
  const auto lab = read_idx_labels(labels);
  if (lab.size() != img.count) {
    throw DataError(images.string() + " has " + std::to_string(img.count) + " images but " +
                    labels.string() + " has " + std::to_string(lab.size()) + " labels");
  }
  const Eigen::Index dim = static_cast<Eigen::Index>(img.rows) * img.cols;
  LabelledSet out;
  out.x.resize(img.count, dim);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) out.x.data()[i] = img.pixels[i] / 255.0;
  out.labels.assign(lab.begin(), lab.end());
  out.y = one_hot(out.labels, classes);
  return out;
}

std::filesystem::path data_root() {
  if (const char* env = std::getenv("DATA_DIR"); env != nullptr && *env != '\0') return env;
  return "data";
}

Dataset load_mnist_dir(const std::filesystem::path& dir, const std::string& name,
                       Eigen::Index train_limit) {
  auto train = load_idx(dir / "train-images-idx3-ubyte", dir / "train-labels-idx1-ubyte");
  auto test = load_idx(dir / "t10k-images-idx3-ubyte", dir / "t10k-labels-idx1-ubyte");
  Dataset d;
  d.name = name;
  d.classes = 10;
  if (train_limit > 0 && train_limit < train.x.rows()) {
    d.x_train = train.x.topRows(train_limit);
    d.y_train = train.y.topRows(train_limit);
    d.labels_train.assign(train.labels.begin(), train.labels.begin() + train_limit);
    d.metadata["train_subset"] = "first " + std::to_string(train_limit);
  } else {
    d.x_train = std::move(train.x);
    d.y_train = std::move(train.y);
    d.labels_train = std::move(train.labels);
  }
  d.x_test = std::move(test.x);
  d.y_test = std::move(test.y);
  d.labels_test = std::move(test.labels);
  d.metadata["source"] = dir.string();
  d.validate();
  return d;
}

// ---------------------------------------------------------------------------
// UCI

const UciLayout& uci_layout(const std::string& name) {
  static const std::vector<UciLayout> layouts = [] {
    std::vector<UciLayout> v;
    std::vector<std::string> digits;
    for (int i = 0; i < 10; ++i) digits.push_back(std::to_string(i));
    std::vector<std::string> letters;
    for (char c = 'A'; c <= 'Z'; ++c) letters.emplace_back(1, c);
    v.push_back({"pendigits", 7494, 3498, 16, digits, false});
    v.push_back({"letter", 10500, 5000, 16, letters, true});
    v.push_back({"avila", 10430, 10437, 11, {"A", "B", "C", "D", "E", "F", "G", "H", "I", "W", "X", "Y"},
                 false});
    return v;
  }();
  for (const auto& l : layouts)
    if (l.name == name) return l;
  throw DataError("unknown UCI dataset '" + name + "' (expected pendigits, letter or avila)");
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

bool parse_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end != nullptr && *end == '\0';
}

LabelledSet read_uci_table(const std::filesystem::path& path, const UciLayout& layout,
                           Eigen::Index expected_rows) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<double> values;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  const std::size_t columns = static_cast<std::size_t>(layout.features) + 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != columns) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(columns) + " columns for " + layout.name + ", found " +
                      std::to_string(cells.size()));
    }
    const std::size_t label_col = layout.label_first ? 0 : columns - 1;
    const auto it = std::find(layout.classes.begin(), layout.classes.end(), cells[label_col]);
    if (it == layout.classes.end()) {
      if (line_no == 1) continue;  // header row
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": unknown label '" +
                      cells[label_col] + "'");
    }
    for (std::size_t c = 0; c < columns; ++c) {
      if (c == label_col) continue;
      double x = 0.0;
      if (!parse_double(cells[c], x) || !std::isfinite(x)) {
        throw DataError(path.string() + ":" + std::to_string(line_no) + ": bad numeric cell '" +
                        cells[c] + "'");
      }
      values.push_back(x);
    }
    labels.push_back(static_cast<int>(it - layout.classes.begin()));
  }
  const auto rows = static_cast<Eigen::Index>(labels.size());
  if (rows != expected_rows) {
    throw DataError(path.string() + ": " + layout.name + " split must have " +
                    std::to_string(expected_rows) + " rows, found " + std::to_string(rows));
  }
  LabelledSet out;
  out.x = Eigen::Map<const Matrix>(values.data(), rows, layout.features);
  out.labels = std::move(labels);
  out.y = one_hot(out.labels, static_cast<int>(layout.classes.size()));
  return out;
}

}  // namespace

Dataset load_uci_csv(const std::filesystem::path& train_csv, const std::filesystem::path& test_csv,
                     const std::string& name, const UciOptions& options) {
  const UciLayout& layout = uci_layout(name);
  auto train = read_uci_table(train_csv, layout, layout.train_rows);
  auto test = read_uci_table(test_csv, layout, layout.test_rows);
  Dataset d;
  d.name = name;
  d.classes = static_cast<int>(layout.classes.size());
  if (options.standardize) {
    const Eigen::RowVectorXd mean = train.x.colwise().mean();
    Eigen::RowVectorXd sd =
        ((train.x.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(train.x.rows()))
            .sqrt();
    for (Eigen::Index c = 0; c < sd.size(); ++c)
      if (!(sd(c) > 0.0)) sd(c) = 1.0;
    train.x = (train.x.rowwise() - mean).array().rowwise() / sd.array();
    test.x = (test.x.rowwise() - mean).array().rowwise() / sd.array();
    d.metadata["preprocessing"] = "standardized with training mean/std";
  } else {
    d.metadata["preprocessing"] = "none";
  }
  d.x_train = std::move(train.x);
  d.y_train = std::move(train.y);
  d.labels_train = std::move(train.labels);
  d.x_test = std::move(test.x);
  d.y_test = std::move(test.y);
  d.labels_test = std::move(test.labels);
  d.validate();
  return d;
}

Dataset load_uci_dir(const std::filesystem::path& dir, const std::string& name,
                     const UciOptions& options) {
  return load_uci_csv(dir / (name + ".train.csv"), dir / (name + ".test.csv"), name, options);
}

// ---------------------------------------------------------------------------
// MNIST teacher-student

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp().matrix();
    out.row(i) = e / e.sum();
  }
  return out;
}

std::vector<Eigen::Index> balanced_subset(const std::vector<int>& labels, Eigen::Index head,
                                          Eigen::Index total, int classes) {
  if (classes < 1 || total % classes != 0) {
    throw DataError("balanced_subset: total " + std::to_string(total) +
                    " is not divisible by the class count");
  }
  const Eigen::Index per_class = total / classes;
  const Eigen::Index limit = std::min<Eigen::Index>(head, static_cast<Eigen::Index>(labels.size()));
  std::vector<Eigen::Index> counts(classes, 0);
  for (Eigen::Index i = 0; i < limit; ++i) ++counts[labels[i]];
  for (int c = 0; c < classes; ++c) {
    if (counts[c] < per_class) {
      std::string msg = "balanced_subset: class " + std::to_string(c) + " has " +
                        std::to_string(counts[c]) + " samples among the first " +
                        std::to_string(limit) + ", need " + std::to_string(per_class) +
                        " (counts:";
      for (auto n : counts) msg += " " + std::to_string(n);
      throw DataError(msg + ")");
    }
  }
  std::vector<Eigen::Index> taken(classes, 0);
  std::vector<Eigen::Index> out;
  out.reserve(total);
  for (Eigen::Index i = 0; i < limit; ++i) {
    const int c = labels[i];
    if (taken[c] < per_class) {
      ++taken[c];
      out.push_back(i);
    }
  }
  return out;
}

MnistTeacherStudent mnist_teacher_student(const Dataset& mnist, std::uint64_t seed,
                                          const MnistTeacherOptions& options) {
  if (!mnist.is_classification()) throw DataError("mnist_teacher_student: needs a labelled set");
  const int classes = mnist.classes;
  const auto subset = balanced_subset(mnist.labels_train, options.head_samples,
                                      options.balanced_total, classes);
  const Eigen::Index m_sub = static_cast<Eigen::Index>(subset.size());
  const Eigen::Index m = mnist.x_test.rows() + m_sub;
  const Eigen::Index n0 = mnist.x_train.cols();

  Matrix x(m, n0);
  std::vector<int> labels(static_cast<std::size_t>(m));
  x.topRows(mnist.x_test.rows()) = mnist.x_test;
  std::copy(mnist.labels_test.begin(), mnist.labels_test.end(), labels.begin());
  for (Eigen::Index r = 0; r < m_sub; ++r) {
    x.row(mnist.x_test.rows() + r) = mnist.x_train.row(subset[r]);
    labels[static_cast<std::size_t>(mnist.x_test.rows() + r)] = mnist.labels_train[subset[r]];
  }
  const Matrix y = one_hot(labels, classes);

  // Teacher: width n*, SiLU, no output scaling, trained by full-batch GD on
  // the softmax cross-entropy.
  const Eigen::Index width = options.teacher_width;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector theta(width * n0 + width * classes);
  for (Eigen::Index i = 0; i < width * n0; ++i) theta(i) = normal(rng) / std::sqrt(static_cast<double>(n0));
  for (Eigen::Index i = width * n0; i < theta.size(); ++i) {
    theta(i) = normal(rng) / std::sqrt(static_cast<double>(width));
  }
  auto u = [&] { return Eigen::Map<const Matrix>(theta.data(), width, n0); };
  auto v = [&] { return Eigen::Map<const Matrix>(theta.data() + width * n0, width, classes); };
  double ce = 0.0;
  for (int step = 0; step <= options.teacher_steps; ++step) {
    const auto hidden = kernels::hidden_layer(u(), x, Activation::SiLU);
    const Matrix logits = kernels::outputs(hidden, v(), 1.0);
    const Matrix prob = softmax_rows(logits);
    ce = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) ce -= std::log(std::max(prob(i, labels[i]), 1e-300));
    ce /= static_cast<double>(m);
    if (!std::isfinite(ce)) throw DivergenceError(static_cast<std::size_t>(step), "teacher cross-entropy");
    if (step == options.teacher_steps) break;
    const Matrix grad_out = (prob - y) / static_cast<double>(m);
    const Vector r = Eigen::Map<const Vector>(grad_out.data(), grad_out.size());
    theta -= options.teacher_lr * kernels::jacobian_transpose_apply(hidden, v(), x, 1.0, r);
  }

  MnistTeacherStudent out;
  out.teacher.u = u();
  out.teacher.v = v();
  out.teacher.activation = Activation::SiLU;
  out.teacher_train_loss = ce;

  Dataset& d = out.data;
  d.name = mnist.name + "-teacher-student";
  d.classes = classes;
  d.x_train = std::move(x);
  d.y_train = softmax_rows(teacher_forward(out.teacher, d.x_train));
  d.labels_train = std::move(labels);
  d.x_test = mnist.x_test;
  d.y_test = mnist.y_test;
  d.labels_test = mnist.labels_test;
  d.metadata["balanced_subset"] = std::to_string(options.balanced_total / classes) +
                                  " per class in original order from the first " +
                                  std::to_string(options.head_samples) + " training samples";
  d.metadata["teacher"] = "width " + std::to_string(width) + ", silu, cross-entropy GD " +
                          std::to_string(options.teacher_steps) + " steps, lr " +
                          std::to_string(options.teacher_lr);
  d.validate();
  return out;
}

}  // namespace ggn
