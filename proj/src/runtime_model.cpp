#include "minerlink/runtime_model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "minerlink/csv.hpp"
#include "minerlink/error.hpp"

namespace minerlink {

namespace {

double pair_term(std::size_t n) {
  const double x = static_cast<double>(n);
  return x * x - x;
}

}  // namespace

RuntimeModel fit_runtime(const std::vector<Measurement>& measurements,
                         bool with_intercept) {
  std::vector<std::pair<double, double>> pts;  // (n^2 - n, seconds)
  for (const auto& m : measurements) {
    if (m.record_count < 2) continue;
    if (!(m.elapsed_seconds >= 0.0)) throw DataError("runtime: negative elapsed time");
    pts.emplace_back(pair_term(m.record_count), m.elapsed_seconds);
  }
  if (pts.empty()) throw DataError("runtime: no measurement with n >= 2");

  RuntimeModel model;
  model.n_points = pts.size();
  if (with_intercept && pts.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& [x, y] : pts) mx += x, my += y;
    mx /= static_cast<double>(pts.size());
    my /= static_cast<double>(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) {
      sxy += (x - mx) * (y - my);
      sxx += (x - mx) * (x - mx);
    }
    model.k = sxx > 0.0 ? sxy / sxx : 0.0;
    model.intercept = my - model.k * mx;
  } else {
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [x, y] : pts) {
      sxy += x * y;
      sxx += x * x;
    }
    model.k = sxy / sxx;
  }

  double sq = 0.0;
  for (const auto& [x, y] : pts) {
    const double r = y - (model.k * x + model.intercept);
    sq += r * r;
  }
  model.fit_residual = std::sqrt(sq / static_cast<double>(pts.size()));
  return model;
}

double predict_seconds(const RuntimeModel& model, std::size_t n) {
  return model.k * pair_term(n) + model.intercept;
}

std::vector<Measurement> benchmark(const std::vector<std::size_t>& sizes,
                                   const std::function<void(std::size_t)>& link_pairs) {
  std::vector<Measurement> out;
  if (sizes.empty()) return out;
  link_pairs(*std::max_element(sizes.begin(), sizes.end()));
  for (std::size_t n : sizes) {
    const auto start = std::chrono::steady_clock::now();
    link_pairs(n);
    const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
    out.push_back({n, dt.count()});
  }
  return out;
}

void write_measurements(std::ostream& out, const std::vector<Measurement>& ms) {
  out << "record_count,elapsed_seconds\n";
  for (const auto& m : ms) {
    char buf[32];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, m.elapsed_seconds);
    out << m.record_count << ',' << std::string_view(buf, ptr - buf) << '\n';
  }
}

std::vector<Measurement> read_measurements(std::istream& in) {
  const std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const auto rows = csv::parse(text);
  std::vector<Measurement> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (r == 0 && !row.empty() && row[0] == "record_count") continue;
    if (row.size() != 2) {
      throw DataError("measurements: row " + std::to_string(r + 1) + " needs 2 fields");
    }
    Measurement m;
    const auto& a = row[0];
    const auto& b = row[1];
    const auto ra = std::from_chars(a.data(), a.data() + a.size(), m.record_count);
    const auto rb = std::from_chars(b.data(), b.data() + b.size(), m.elapsed_seconds);
    if (ra.ec != std::errc() || ra.ptr != a.data() + a.size() || rb.ec != std::errc() ||
        rb.ptr != b.data() + b.size() || m.elapsed_seconds < 0.0) {
      throw DataError("measurements: bad row " + std::to_string(r + 1));
    }
    out.push_back(m);
  }
  return out;
}

}  // namespace minerlink
