#include "hjbpinn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "hjbpinn/error.hpp"
#include "hjbpinn/io.hpp"
#include "hjbpinn/rng.hpp"

namespace hjbpinn {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string trace_name(int k, std::uint64_t seed) {
  return "traces/k" + std::to_string(k) + "_seed" + std::to_string(seed) + ".csv";
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s) {
  if (s == "nan") return kNaN;
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidArgument("bad number '" + s + "' in csv");
  return v;
}

template <class Int>
Int parse_int(const std::string& s) {
  Int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw InvalidArgument("bad integer '" + s + "' in csv");
  return v;
}

std::string num(double v) { return std::isfinite(v) ? fmt_double(v) : std::string(std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf")); }

std::vector<double> average_ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t m = i; m <= j; ++m) ranks[idx[m]] = r;
    i = j + 1;
  }
  return ranks;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return kNaN;
  return sxy / std::sqrt(sxx * syy);
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

SweepRecord run_one(const SweepConfig& cfg, int k, std::uint64_t seed, const Dataset* shared) {
  SweepRecord rec;
  rec.k = k;
  rec.d_N = static_cast<std::int64_t>(k) * (cfg.problem.n + 1);
  rec.seed = seed;
  rec.trace_path = trace_name(k, seed);
  std::optional<Dataset> own;
  if (shared == nullptr) {
    own = sample_dataset(cfg.problem, cfg.N_r, cfg.N_0, cfg.N_s, cfg.sigma2, cfg.noise, run_seed(seed, k));
  }
  const Dataset& data = shared != nullptr ? *shared : *own;
  try {
    const NetworkParams p0 = init_network(k, cfg.problem.n, run_seed(seed, k), cfg.activation);
    TrainTrace tr = train(p0, data, cfg.weights, cfg.train);
    rec.trace = std::move(tr.points);
    rec.final_risk = rec.trace.back().risk;
    rec.accuracy = rec.trace.back().accuracy;
    rec.crossed_sigma2 = rec.final_risk.total < cfg.sigma2;
  } catch (const TrainingDiverged& e) {
    rec.failed = true;
    rec.error = e.what();
    rec.trace = e.trace().points;
    rec.final_risk = {kNaN, kNaN, kNaN, kNaN};
    rec.accuracy = kNaN;
  }
  return rec;
}

void write_trace_points(const std::vector<TracePoint>& pts, std::ostream& os) {
  TrainTrace tmp;
  tmp.points = pts;
  write_trace_csv(tmp, os);
}

std::vector<TracePoint> read_trace_file(const std::filesystem::path& path) {
  std::istringstream is(read_file(path));
  std::string line;
  std::getline(is, line);  // header
  std::vector<TracePoint> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 6) throw InvalidArgument("malformed trace row in " + path.string());
    TracePoint p;
    p.step = parse_int<int>(f[0]);
    p.risk = {parse_double(f[1]), parse_double(f[2]), parse_double(f[3]), parse_double(f[4])};
    p.accuracy = parse_double(f[5]);
    out.push_back(p);
  }
  return out;
}

}  // namespace

SweepConfig desk_preset() {
  SweepConfig c;
  c.train.steps = 5000;
  c.train.record_every = 100;
  return c;
}

SweepConfig paper_preset() {
  SweepConfig c = desk_preset();
  c.train.steps = 20000;
  return c;
}

void validate(const SweepConfig& cfg) {
  if (cfg.widths.empty()) throw InvalidArgument("sweep needs at least one width");
  for (std::size_t i = 0; i < cfg.widths.size(); ++i) {
    if (cfg.widths[i] < 1) throw InvalidArgument("widths must be >= 1");
    if (i > 0 && cfg.widths[i] <= cfg.widths[i - 1]) throw InvalidArgument("widths must be strictly increasing");
  }
  if (cfg.seeds.empty()) throw InvalidArgument("sweep needs at least one seed");
  if (cfg.jobs < 1) throw InvalidArgument("jobs must be >= 1");
  validate(cfg.train);
  validate(cfg.weights);
  validate(cfg.problem);
}

std::uint64_t run_seed(std::uint64_t seed, int k) { return stream_seed(seed, static_cast<std::uint64_t>(k)); }

std::vector<SweepRecord> run_sweep(const SweepConfig& cfg) {
  validate(cfg);
  std::optional<Dataset> shared;
  if (cfg.shared_dataset) {
    shared = sample_dataset(cfg.problem, cfg.N_r, cfg.N_0, cfg.N_s, cfg.sigma2, cfg.noise, cfg.data_seed);
  }
  struct Task {
    int k;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (int k : cfg.widths) {
    for (std::uint64_t s : cfg.seeds) tasks.push_back({k, s});
  }
  std::vector<std::optional<SweepRecord>> results(tasks.size());
  const bool persist = !cfg.out_dir.empty();
  if (persist) std::filesystem::create_directories(cfg.out_dir / "traces");

  std::mutex mu;
  std::size_t flushed = 0;
  std::exception_ptr first_error;
  std::atomic<std::size_t> next{0};

  // Single writer: rows reach sweep.csv in task order, whatever order runs finish in.
  auto publish = [&](std::size_t idx, SweepRecord rec) {
    std::lock_guard<std::mutex> lock(mu);
    results[idx] = std::move(rec);
    if (!persist) return;
    const auto& r = *results[idx];
    std::ostringstream tr;
    write_trace_points(r.trace, tr);
    write_file_atomic(cfg.out_dir / r.trace_path, tr.str());
    bool advanced = false;
    while (flushed < results.size() && results[flushed]) {
      ++flushed;
      advanced = true;
    }
    if (advanced) {
      std::vector<SweepRecord> done;
      for (std::size_t i = 0; i < flushed; ++i) {
        SweepRecord copy = *results[i];
        copy.trace.clear();
        done.push_back(std::move(copy));
      }
      std::ostringstream os;
      write_sweep_csv(done, os);
      write_file_atomic(cfg.out_dir / "sweep.csv", os.str());
    }
  };

  auto worker = [&]() {
    while (true) {
      const std::size_t idx = next.fetch_add(1);
      if (idx >= tasks.size()) return;
      {
        std::lock_guard<std::mutex> lock(mu);
        if (first_error) return;
      }
      try {
        publish(idx, run_one(cfg, tasks[idx].k, tasks[idx].seed, shared ? &*shared : nullptr));
      } catch (...) {
        std::lock_guard<std::mutex> lock(mu);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::min<int>(cfg.jobs, static_cast<int>(tasks.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<SweepRecord> out;
  out.reserve(results.size());
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("spearman inputs differ in length");
  if (x.size() < 2) return kNaN;
  return pearson(average_ranks(x), average_ranks(y));
}

LinearFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("fit inputs differ in length");
  LinearFit f;
  f.points = static_cast<int>(x.size());
  if (x.size() < 2) {
    f.slope = f.intercept = f.r2 = kNaN;
    return f;
  }
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) {
    f.slope = f.intercept = f.r2 = kNaN;
    return f;
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (f.intercept + f.slope * x[i]);
    sse += e * e;
  }
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

SweepSummary analyze_sweep(const std::vector<SweepRecord>& records, double sigma2) {
  if (records.size() < 3) throw InvalidArgument("sweep analysis needs at least 3 records");
  SweepSummary s;
  s.records = static_cast<int>(records.size());
  s.sigma2 = sigma2;
  std::map<int, std::vector<const SweepRecord*>> by_width;
  for (const auto& r : records) {
    if (r.failed) {
      ++s.failed;
      continue;
    }
    by_width[r.k].push_back(&r);
    if (r.crossed_sigma2 && (!s.smallest_crossing_d_N || r.d_N < *s.smallest_crossing_d_N)) {
      s.smallest_crossing_d_N = r.d_N;
    }
  }
  if (by_width.empty()) throw InvalidArgument("sweep analysis needs at least one successful run");
  for (const auto& [k, runs] : by_width) {
    WidthAggregate a;
    a.k = k;
    a.d_N = runs.front()->d_N;
    a.runs = static_cast<int>(runs.size());
    std::vector<double> acc;
    for (const auto* r : runs) {
      acc.push_back(r->accuracy);
      if (r->crossed_sigma2) ++a.crossed;
    }
    a.mean_accuracy = std::accumulate(acc.begin(), acc.end(), 0.0) / static_cast<double>(acc.size());
    a.median_accuracy = median(acc);
    s.widths.push_back(a);
  }

  double best = -std::numeric_limits<double>::infinity();
  for (const auto& a : s.widths) best = std::max(best, a.mean_accuracy);
  std::size_t boundary = s.widths.size() - 1;
  for (std::size_t i = 0; i < s.widths.size(); ++i) {
    if (best - s.widths[i].mean_accuracy <= s.plateau_tolerance * std::abs(best)) {
      boundary = i;
      break;
    }
  }
  s.plateau_d_N = s.widths[boundary].d_N;

  std::vector<double> dn, root, mean_acc, med_acc, run_dn, run_acc;
  for (std::size_t i = 0; i <= boundary; ++i) {
    const auto& a = s.widths[i];
    dn.push_back(static_cast<double>(a.d_N));
    root.push_back(std::sqrt(static_cast<double>(a.d_N)));
    mean_acc.push_back(a.mean_accuracy);
    med_acc.push_back(a.median_accuracy);
    for (const auto* r : by_width[a.k]) {
      run_dn.push_back(static_cast<double>(r->d_N));
      run_acc.push_back(r->accuracy);
    }
  }
  s.sqrt_fit = least_squares(root, mean_acc);
  s.spearman = spearman(dn, mean_acc);
  s.spearman_median = spearman(dn, med_acc);
  s.spearman_runs = spearman(run_dn, run_acc);
  return s;
}

nlohmann::json to_json(const SweepSummary& s) {
  auto jnum = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::json widths = nlohmann::json::array();
  for (const auto& a : s.widths) {
    widths.push_back({{"k", a.k},
                      {"d_N", a.d_N},
                      {"runs", a.runs},
                      {"mean_accuracy", jnum(a.mean_accuracy)},
                      {"median_accuracy", jnum(a.median_accuracy)},
                      {"crossed", a.crossed}});
  }
  nlohmann::json j;
  j["records"] = s.records;
  j["failed"] = s.failed;
  j["sigma2"] = s.sigma2;
  j["widths"] = widths;
  j["smallest_crossing_d_N"] = s.smallest_crossing_d_N ? nlohmann::json(*s.smallest_crossing_d_N) : nlohmann::json("none");
  j["plateau_tolerance"] = s.plateau_tolerance;
  j["plateau_d_N"] = s.plateau_d_N;
  j["sqrt_fit"] = {{"slope", jnum(s.sqrt_fit.slope)},
                   {"intercept", jnum(s.sqrt_fit.intercept)},
                   {"r2", jnum(s.sqrt_fit.r2)},
                   {"points", s.sqrt_fit.points}};
  j["spearman"] = jnum(s.spearman);
  j["spearman_median"] = jnum(s.spearman_median);
  j["spearman_runs"] = jnum(s.spearman_runs);
  return j;
}

void write_sweep_csv(const std::vector<SweepRecord>& records, std::ostream& os) {
  os << "k,d_N,seed,pde_term,init_term,sup_term,total,accuracy,crossed_sigma2,status,trace_path\n";
  for (const auto& r : records) {
    os << r.k << ',' << r.d_N << ',' << r.seed << ',' << num(r.final_risk.pde) << ',' << num(r.final_risk.init) << ','
       << num(r.final_risk.sup) << ',' << num(r.final_risk.total) << ',' << num(r.accuracy) << ','
       << (r.crossed_sigma2 ? 1 : 0) << ',' << (r.failed ? "failed" : "ok") << ',' << r.trace_path << '\n';
  }
}

std::vector<SweepRecord> read_sweep_dir(const std::filesystem::path& dir) {
  std::istringstream is(read_file(dir / "sweep.csv"));
  std::string line;
  std::getline(is, line);
  std::vector<SweepRecord> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 11) throw InvalidArgument("malformed sweep row: " + line);
    SweepRecord r;
    r.k = parse_int<int>(f[0]);
    r.d_N = parse_int<std::int64_t>(f[1]);
    r.seed = parse_int<std::uint64_t>(f[2]);
    r.final_risk = {parse_double(f[3]), parse_double(f[4]), parse_double(f[5]), parse_double(f[6])};
    r.accuracy = parse_double(f[7]);
    r.crossed_sigma2 = f[8] == "1";
    r.failed = f[9] == "failed";
    r.trace_path = f[10];
    if (!r.trace_path.empty() && std::filesystem::exists(dir / r.trace_path)) {
      r.trace = read_trace_file(dir / r.trace_path);
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<Fig1Point> fig1_points(const std::vector<SweepRecord>& records) {
  std::vector<Fig1Point> pts;
  for (const auto& r : records) {
    for (const auto& t : r.trace) {
      if (!r.failed && &t == &r.trace.back()) continue;
      pts.push_back({r.d_N, t.accuracy, false, t.step, r.k, r.seed});
    }
    if (!r.failed) {
      const int step = r.trace.empty() ? 0 : r.trace.back().step;
      pts.push_back({r.d_N, r.accuracy, true, step, r.k, r.seed});
    }
  }
  return pts;
}

void emit_fig1_data(const std::vector<SweepRecord>& records, double sigma2, const std::filesystem::path& csv_path,
                    const std::optional<std::filesystem::path>& svg_path) {
  if (records.empty()) throw InvalidArgument("fig1 data needs at least one record");
  const auto pts = fig1_points(records);
  const double reference = 1.0 - sigma2;
  std::ostringstream os;
  os << "d_N,accuracy,is_final,step,k,seed,reference\n";
  for (const auto& p : pts) {
    os << p.d_N << ',' << num(p.accuracy) << ',' << (p.is_final ? 1 : 0) << ',' << p.step << ',' << p.k << ','
       << p.seed << ',' << num(reference) << '\n';
  }
  write_file_atomic(csv_path, os.str());
  if (!svg_path) return;

  // Log-scaled d_N axis; accuracy clipped to [-1, 1].
  const double W = 640, H = 420, L = 60, R = 20, Tm = 20, Bm = 50;
  std::int64_t dmin = pts.empty() ? 1 : pts.front().d_N, dmax = dmin;
  for (const auto& p : pts) {
    dmin = std::min(dmin, p.d_N);
    dmax = std::max(dmax, p.d_N);
  }
  const double lx0 = std::log10(static_cast<double>(dmin)) - 0.1;
  const double lx1 = std::log10(static_cast<double>(dmax)) + 0.1;
  const double y0 = -1.0, y1 = 1.0;
  auto px = [&](double d) { return L + (std::log10(d) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto py = [&](double a) { return Tm + (y1 - a) / (y1 - y0) * (H - Tm - Bm); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << H - Bm << "\" x2=\"" << W - R << "\" y2=\"" << H - Bm
      << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << Tm << "\" x2=\"" << L << "\" y2=\"" << H - Bm << "\" stroke=\"black\"/>\n";
  for (double a : {-1.0, -0.5, 0.0, 0.5, 1.0}) {
    svg << "<text x=\"" << L - 8 << "\" y=\"" << py(a) + 4 << "\" font-size=\"11\" text-anchor=\"end\">" << a
        << "</text>\n";
  }
  for (std::int64_t d = 1; d <= dmax * 10; d *= 10) {
    if (d < dmin / 10) continue;
    const double x = px(static_cast<double>(d));
    if (x < L || x > W - R) continue;
    svg << "<text x=\"" << x << "\" y=\"" << H - Bm + 16 << "\" font-size=\"11\" text-anchor=\"middle\">" << d
        << "</text>\n";
  }
  svg << "<text x=\"" << (W + L) / 2 << "\" y=\"" << H - 10 << "\" font-size=\"12\" text-anchor=\"middle\">d_N</text>\n";
  svg << "<text x=\"14\" y=\"" << (H - Bm + Tm) / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 "
      << (H - Bm + Tm) / 2 << ")\" text-anchor=\"middle\">1 - training error</text>\n";
  svg << "<line x1=\"" << L << "\" y1=\"" << py(reference) << "\" x2=\"" << W - R << "\" y2=\"" << py(reference)
      << "\" stroke=\"gray\" stroke-dasharray=\"6,4\"/>\n";
  for (bool finals : {false, true}) {
    for (const auto& p : pts) {
      if (p.is_final != finals || !std::isfinite(p.accuracy) || p.accuracy < y0 || p.accuracy > y1) continue;
      svg << "<circle cx=\"" << px(static_cast<double>(p.d_N)) << "\" cy=\"" << py(p.accuracy) << "\" r=\""
          << (finals ? 3 : 1.2) << "\" fill=\"" << (finals ? "red" : "steelblue") << "\"/>\n";
    }
  }
  svg << "</svg>\n";
  write_file_atomic(*svg_path, svg.str());
}

std::vector<Fig1Point> read_fig1_csv(const std::filesystem::path& csv_path) {
  std::istringstream is(read_file(csv_path));
  std::string line;
  std::getline(is, line);
  std::vector<Fig1Point> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 7) throw InvalidArgument("malformed fig1 row: " + line);
    out.push_back({parse_int<std::int64_t>(f[0]), parse_double(f[1]), f[2] == "1", parse_int<int>(f[3]),
                   parse_int<int>(f[4]), parse_int<std::uint64_t>(f[5])});
  }
  return out;
}

}  // namespace hjbpinn
