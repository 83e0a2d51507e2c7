#include "specflow/spectral.hpp"

#include <cmath>
#include <cstddef>

#include "specflow/errors.hpp"
#include "specflow/io.hpp"
#include "specflow/jsonutil.hpp"

namespace specflow {

namespace {

constexpr double kEigenFloor = 1e-12;

}  // namespace

SpectralBasis fit_basis(const std::vector<Vector>& flat, int k) {
  require(flat.size() >= 2, ErrClass::BadInput,
          "basis fit needs at least 2 samples");
  const int n = static_cast<int>(flat.size());
  const int d = static_cast<int>(flat.front().size());
  require(d > 0, ErrClass::BadInput, "basis fit on empty vectors");
  require(k >= 1 && k <= d, ErrClass::BadInput,
          "component count must lie in [1, dim]");
  for (const Vector& x : flat)
    require(static_cast<int>(x.size()) == d, ErrClass::BadInput,
            "basis fit on ragged sample set");

  Vector mean(static_cast<size_t>(d), 0.0);
  for (const Vector& x : flat)
    for (int j = 0; j < d; ++j) mean[static_cast<size_t>(j)] += x[static_cast<size_t>(j)];
  for (double& m : mean) m /= double(n);

  Matrix centered(n, d);
  for (int i = 0; i < n; ++i) {
    const Vector& x = flat[static_cast<size_t>(i)];
    double* row = centered.row(i);
    for (int j = 0; j < d; ++j) row[j] = x[static_cast<size_t>(j)] - mean[static_cast<size_t>(j)];
  }

  Matrix cov = matmul(transpose(centered), centered);
  const double inv = 1.0 / double(n - 1);
  for (double& v : cov.a) v *= inv;

  SymEigen eig = sym_eigen(cov);
  require(eig.values[static_cast<size_t>(k - 1)] > kEigenFloor, ErrClass::NumericFailure,
          "requested component count exceeds the data rank (eigenvalue <= 1e-12)");

  double total = 0.0;
  for (double v : eig.values) total += std::max(v, 0.0);

  SpectralBasis b;
  b.k = k;
  b.D = d;
  b.mean = std::move(mean);
  b.basis = Matrix(k, d);
  b.scales.resize(static_cast<size_t>(k));
  b.evr.resize(static_cast<size_t>(k));
  for (int i = 0; i < k; ++i) {
    const double lam = eig.values[static_cast<size_t>(i)];
    b.scales[static_cast<size_t>(i)] = std::sqrt(lam);
    b.evr[static_cast<size_t>(i)] = lam / total;
    double* row = b.basis.row(i);
    for (int j = 0; j < d; ++j) row[j] = eig.vectors(j, i);
  }
  return b;
}

Vector project(const SpectralBasis& b, const Vector& x) {
  require(static_cast<int>(x.size()) == b.D, ErrClass::BadInput,
          "projection input has wrong dimension");
  Vector centered(static_cast<size_t>(b.D));
  for (int j = 0; j < b.D; ++j)
    centered[static_cast<size_t>(j)] = x[static_cast<size_t>(j)] - b.mean[static_cast<size_t>(j)];
  Vector z(static_cast<size_t>(b.k));
  for (int i = 0; i < b.k; ++i)
    z[static_cast<size_t>(i)] =
        dot(b.basis.row(i), centered.data(), b.D) / b.scales[static_cast<size_t>(i)];
  return z;
}

Vector reconstruct(const SpectralBasis& b, const Vector& z) {
  require(static_cast<int>(z.size()) == b.k, ErrClass::BadInput,
          "latent input has wrong dimension");
  Vector x = b.mean;
  for (int i = 0; i < b.k; ++i)
    axpy(z[static_cast<size_t>(i)] * b.scales[static_cast<size_t>(i)], b.basis.row(i),
         x.data(), b.D);
  return x;
}

std::vector<Vector> traverse(const SpectralBasis& b, int component,
                             const std::vector<double>& offsets,
                             const Vector& fixed) {
  require(component >= 0 && component < b.k, ErrClass::BadInput,
          "traverse component out of range");
  require(static_cast<int>(fixed.size()) == b.k, ErrClass::BadInput,
          "traverse base latent has wrong dimension");
  std::vector<Vector> out;
  out.reserve(offsets.size());
  Vector z = fixed;
  for (double off : offsets) {
    z[static_cast<size_t>(component)] = off;
    out.push_back(reconstruct(b, z));
  }
  return out;
}

std::string serialize_basis(const SpectralBasis& b) {
  for (double v : b.mean)
    require(std::isfinite(v), ErrClass::NumericFailure, "basis mean not finite");
  for (double v : b.basis.a)
    require(std::isfinite(v), ErrClass::NumericFailure, "basis rows not finite");
  ojson j;
  j["format_version"] = kBasisFormat;
  j["k"] = b.k;
  j["D"] = b.D;
  j["mean"] = b.mean;
  j["scales"] = b.scales;
  j["evr"] = b.evr;
  ojson rows = ojson::array();
  for (int i = 0; i < b.k; ++i) {
    ojson row = ojson::array();
    const double* r = b.basis.row(i);
    for (int jcol = 0; jcol < b.D; ++jcol) row.push_back(r[jcol]);
    rows.push_back(std::move(row));
  }
  j["basis"] = std::move(rows);
  std::string s(kBasisFormat);
  s += '\n';
  s += j.dump();
  s += '\n';
  return s;
}

void save_basis(const SpectralBasis& b, const std::string& path) {
  write_text_file(path, serialize_basis(b));
}

SpectralBasis load_basis(const std::string& path) {
  const std::string text = read_text_file(path);
  const size_t nl = text.find('\n');
  require(nl != std::string::npos, ErrClass::ParseError,
          "basis file has no version line");
  std::string version = text.substr(0, nl);
  if (!version.empty() && version.back() == '\r') version.pop_back();
  require(version == kBasisFormat, ErrClass::VersionMismatch,
          "basis file version '" + version + "', expected '" + kBasisFormat + "'");
  ojson j = parse_json(text.substr(nl + 1), "basis file");
  reject_unknown_keys(j, {"format_version", "k", "D", "mean", "scales", "evr", "basis"},
                      "basis file", ErrClass::ParseError);
  for (const char* key : {"format_version", "k", "D", "mean", "scales", "evr", "basis"})
    require(j.contains(key), ErrClass::ParseError,
            std::string("basis file missing field '") + key + "'");
  require(j["format_version"].get<std::string>() == kBasisFormat,
          ErrClass::VersionMismatch, "basis header format_version mismatch");

  SpectralBasis b;
  b.k = j["k"].get<int>();
  b.D = j["D"].get<int>();
  require(b.k >= 1 && b.D >= 1 && b.k <= b.D, ErrClass::ParseError,
          "basis file has inconsistent dimensions");
  b.mean = j["mean"].get<Vector>();
  b.scales = j["scales"].get<Vector>();
  b.evr = j["evr"].get<Vector>();
  require(static_cast<int>(b.mean.size()) == b.D, ErrClass::ParseError,
          "basis mean length disagrees with D");
  require(static_cast<int>(b.scales.size()) == b.k, ErrClass::ParseError,
          "basis scales length disagrees with k");
  require(static_cast<int>(b.evr.size()) == b.k, ErrClass::ParseError,
          "basis evr length disagrees with k");
  for (double s : b.scales)
    require(std::isfinite(s) && s > 0.0, ErrClass::ParseError,
            "basis scales must be positive");
  const ojson& rows = j["basis"];
  require(rows.is_array() && static_cast<int>(rows.size()) == b.k,
          ErrClass::ParseError, "basis row count disagrees with k");
  b.basis = Matrix(b.k, b.D);
  for (int i = 0; i < b.k; ++i) {
    const ojson& row = rows[static_cast<size_t>(i)];
    require(row.is_array() && static_cast<int>(row.size()) == b.D,
            ErrClass::ParseError, "basis row length disagrees with D");
    double* dst = b.basis.row(i);
    for (int jcol = 0; jcol < b.D; ++jcol)
      dst[jcol] = row[static_cast<size_t>(jcol)].get<double>();
  }
  return b;
}

uint64_t basis_hash(const SpectralBasis& b) {
  const std::string s = serialize_basis(b);
  return fnv1a(s);
}

}  // namespace specflow
