#include "chunkloc/encdec/latent.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "chunkloc/encdec/metrics.hpp"
#include "chunkloc/grammar/pattern.hpp"
#include "chunkloc/util/error.hpp"
#include "chunkloc/util/text.hpp"

namespace chunkloc::encdec {

std::vector<LatentRow> compute_latents(const MaskedEncoderModel& model,
                                       std::span<const grammar::SentenceRecord> records,
                                       const embed::EmbeddingIndex& embeddings) {
  std::vector<LatentRow> out;
  out.reserve(records.size());
  for (const auto& r : records) {
    const auto enc = model.encode(embeddings.at(r.id), Phase::eval, nullptr);
    out.push_back({r.id, {enc.mu.value().begin(), enc.mu.value().end()}, r.pattern.str()});
  }
  return out;
}

void write_latents(std::ostream& out, std::span<const LatentRow> rows) {
  for (const auto& row : rows) {
    out << row.id;
    for (const auto v : row.mu) {
      out << '\t' << text::format_double(v);
    }
    out << '\t' << row.label << '\n';
  }
}

std::vector<LatentRow> read_latents(std::istream& in) {
  std::vector<LatentRow> rows;
  std::string line;
  std::uint64_t line_no = 0;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto fields = text::split(line, '\t');
    if (fields.size() < 3) {
      throw FormatError("latent row needs id, values and label", line_no);
    }
    if (width == 0) {
      width = fields.size();
    } else if (fields.size() != width) {
      throw FormatError("latent row width differs from the first row", line_no);
    }
    LatentRow row;
    row.id = text::parse_u64(fields.front(), line_no);
    for (std::size_t i = 1; i + 1 < fields.size(); ++i) {
      row.mu.push_back(text::parse_double(fields[i], line_no));
    }
    row.label = std::string(fields.back());
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_latents(const std::filesystem::path& path, std::span<const LatentRow> rows) {
  std::ofstream out(path);
  if (!out) {
    throw DataError("cannot open '" + path.string() + "' for writing");
  }
  write_latents(out, rows);
}

std::vector<LatentRow> read_latents(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataError("cannot open latent file '" + path.string() + "'");
  }
  return read_latents(in);
}

namespace {

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na) * std::sqrt(nb);
  return denom > 0.0 ? dot / denom : 0.0;
}

}  // namespace

NearestCentroid::NearestCentroid(std::span<const std::vector<double>> points,
                                 std::span<const std::size_t> labels, std::size_t classes) {
  if (points.size() != labels.size()) {
    throw ShapeError("centroid fit: points and labels differ in length");
  }
  const std::size_t dim = points.empty() ? 0 : points.front().size();
  centroids_.assign(classes, std::vector<double>(dim, 0.0));
  std::vector<std::size_t> counts(classes, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (labels[i] >= classes || points[i].size() != dim) {
      throw ShapeError("centroid fit: label out of range or ragged points");
    }
    for (std::size_t d = 0; d < dim; ++d) {
      centroids_[labels[i]][d] += points[i][d];
    }
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < classes; ++c) {
    if (counts[c] == 0) {
      throw DataError("class " + std::to_string(c) + " has no training points");
    }
    for (auto& v : centroids_[c]) {
      v /= static_cast<double>(counts[c]);
    }
  }
}

std::vector<double> NearestCentroid::scores(std::span<const double> point) const {
  std::vector<double> out;
  out.reserve(centroids_.size());
  for (const auto& c : centroids_) {
    if (c.size() != point.size()) {
      throw ShapeError("centroid dimension differs from the query point");
    }
    out.push_back(cosine(c, point));
  }
  return out;
}

std::size_t NearestCentroid::predict(std::span<const double> point) const {
  const auto s = scores(point);
  std::size_t best = 0;
  for (std::size_t c = 1; c < s.size(); ++c) {
    if (s[c] > s[best]) {
      best = c;
    }
  }
  return best;
}

ProbeResult latent_probe(std::span<const LatentRow> train, std::span<const LatentRow> test) {
  const auto& patterns = grammar::enumerate_patterns();
  auto label_of = [](const LatentRow& r) {
    return grammar::pattern_index(grammar::ChunkPattern::parse(r.label));
  };
  std::vector<std::vector<double>> points;
  std::vector<std::size_t> labels;
  for (const auto& r : train) {
    points.push_back(r.mu);
    labels.push_back(label_of(r));
  }
  std::vector<std::size_t> counts(patterns.size(), 0);
  for (const auto l : labels) {
    ++counts[l];
  }
  for (std::size_t p = 0; p < patterns.size(); ++p) {
    if (counts[p] == 0) {
      throw DataError("pattern '" + patterns[p].str() + "' is absent from the probe training latents");
    }
  }
  const NearestCentroid probe(points, labels, patterns.size());
  ProbeResult out;
  std::vector<std::size_t> truth;
  for (const auto& r : test) {
    truth.push_back(label_of(r));
    out.predicted.push_back(probe.predict(r.mu));
  }
  out.macro_f1 = macro_f1(truth, out.predicted, patterns.size());
  out.accuracy = accuracy(truth, out.predicted);
  return out;
}

}  // namespace chunkloc::encdec
