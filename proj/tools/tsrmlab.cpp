// Command-line front end: sample-rab, build-lines, backward, tsrm, validate,
// barrier-check. Every run writes its outputs plus manifest.txt, which can be
// passed back through --config to reproduce the outputs byte for byte.

#include <CLI11.hpp>
#include <json.hpp>

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tsrmlab/tsrm.hpp"
#include "tsrmlab/validate.hpp"

namespace fs = std::filesystem;
using namespace tsrmlab;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_verdict = 2;

// ---------------------------------------------------------------------------
// Formatting and parsing

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& text, const std::string& field) {
  const std::string s = trim(text);
  if (s == "inf" || s == "+inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const char* first = s.data() + (!s.empty() && s[0] == '+' ? 1 : 0);
  const auto res = std::from_chars(first, s.data() + s.size(), x);
  if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
    fail(ErrorKind::InvalidConfig, "field " + field + ": cannot parse '" + text + "' as a number");
  return x;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) out.push_back(trim(cur));
  return out;
}

std::vector<double> parse_list(const std::string& s, const std::string& field) {
  std::vector<double> out;
  for (const auto& tok : split(s, ','))
    if (!tok.empty()) out.push_back(parse_real(tok, field));
  if (out.empty()) fail(ErrorKind::InvalidConfig, "field " + field + ": empty list");
  return out;
}

/// Time grid tokens: start:stop:lin:N, start:stop:geom[:N] (ratio 2 unless N
/// is given) or a comma-separated list.
std::vector<double> parse_times(const std::string& token) {
  const auto parts = split(token, ':');
  if (parts.size() == 1) return parse_list(token, "times");
  if (parts.size() < 3) fail(ErrorKind::InvalidConfig, "field times: expected start:stop:lin:N or start:stop:geom");
  const double a = parse_real(parts[0], "times"), b = parse_real(parts[1], "times");
  if (!(b >= a)) fail(ErrorKind::InvalidConfig, "field times: stop must not precede start");
  std::vector<double> out;
  if (parts[2] == "lin") {
    if (parts.size() != 4) fail(ErrorKind::InvalidConfig, "field times: lin needs a point count");
    const int n = static_cast<int>(parse_real(parts[3], "times"));
    if (n < 1) fail(ErrorKind::InvalidConfig, "field times: point count must be positive");
    for (int k = 0; k < n; ++k) out.push_back(n == 1 ? a : a + (b - a) * k / (n - 1));
  } else if (parts[2] == "geom") {
    if (!(a > 0.0)) fail(ErrorKind::InvalidConfig, "field times: geometric grids need start > 0");
    if (parts.size() == 4) {
      const int n = static_cast<int>(parse_real(parts[3], "times"));
      if (n < 2) fail(ErrorKind::InvalidConfig, "field times: geometric point count must be at least 2");
      for (int k = 0; k < n; ++k) out.push_back(a * std::pow(b / a, static_cast<double>(k) / (n - 1)));
    } else {
      for (double t = a; t <= b * (1 + 1e-12); t *= 2) out.push_back(t);
    }
  } else {
    fail(ErrorKind::InvalidConfig, "field times: unknown spacing '" + parts[2] + "'");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Barrier specification

struct BarrierSpec {
  std::string barrier = "flat:0";
  std::string chi = "0";
  std::string window = "-8:8";
  std::string dx = "0.004";
  double v = 1.0;
};

Grid window_grid(const BarrierSpec& s, double dx) {
  const auto w = split(s.window, ':');
  if (w.size() != 2) fail(ErrorKind::InvalidConfig, "field window: expected a:b");
  const double a = parse_real(w[0], "window"), b = parse_real(w[1], "window");
  if (!(b > a)) fail(ErrorKind::InvalidConfig, "field window: need a < b");
  if (!(dx > 0.0)) fail(ErrorKind::InvalidConfig, "field dx: must be positive");
  return Grid::span(a, b, dx);
}

/// Barrier on a grid of step dx. Brownian barriers are sampled once on the
/// finest step requested and read off coarser grids, so one realisation is
/// shared across steps.
Barrier build_barrier(const BarrierSpec& s, double dx, double finest_dx) {
  const auto parts = split(s.barrier, ':');
  const std::string family = parts.empty() ? "" : parts[0];
  const double chi = parse_real(s.chi, "chi");
  auto arg = [&](std::size_t i, double def) {
    return parts.size() > i && !parts[i].empty() ? parse_real(parts[i], "barrier") : def;
  };
  if (family == "file") {
    if (parts.size() < 2) fail(ErrorKind::InvalidConfig, "field barrier: file needs a path");
    std::ifstream in(s.barrier.substr(5));
    if (!in) fail(ErrorKind::InvalidConfig, "field barrier: cannot open " + s.barrier.substr(5));
    return read_barrier(in).barrier;
  }
  const Grid g = window_grid(s, dx);
  if (family == "flat") return make_flat(g, arg(1, 0.0), chi);
  if (family == "affine") return make_affine(g, arg(1, 0.0), arg(2, 0.0), chi);
  if (family == "cusp") return make_cusp(g, chi);
  if (family == "brownian") {
    const Grid fine = window_grid(s, finest_dx);
    const Barrier b = make_brownian(fine, arg(1, 1.0), arg(2, 0.0), chi, static_cast<std::uint64_t>(arg(3, 1.0)),
                                    arg(4, 0.0));
    return dx == finest_dx ? b : resampled(b, g);
  }
  if (family == "pwl") {
    std::vector<std::pair<double, double>> knots;
    for (const auto& k : split(parts.size() > 1 ? s.barrier.substr(4) : "", ',')) {
      const auto xy = split(k, '/');
      if (xy.size() != 2) fail(ErrorKind::MalformedKnots, "field barrier: pwl knots are x/y pairs separated by commas");
      knots.emplace_back(parse_real(xy[0], "barrier"), parse_real(xy[1], "barrier"));
    }
    return make_piecewise_linear(g, knots, chi);
  }
  fail(ErrorKind::InvalidConfig, "field barrier: unknown family '" + family + "'");
}

Barrier build_barrier(const BarrierSpec& s) {
  const double dx = parse_real(s.dx, "dx");
  return build_barrier(s, dx, dx);
}

void add_barrier_options(CLI::App* app, BarrierSpec& s) {
  app->add_option("--barrier", s.barrier, "flat:C | affine:A:S | brownian:VB:ANCHOR:SEED[:X] | cusp | pwl:x/y,... | file:PATH");
  app->add_option("--chi", s.chi, "switch abscissa (inf for reflection everywhere)");
  app->add_option("--window", s.window, "grid window a:b");
  app->add_option("--dx", s.dx, "grid step");
  app->add_option("--v", s.v, "Brownian variance per unit abscissa");
}

// ---------------------------------------------------------------------------
// Output helpers

class Csv {
 public:
  Csv(const fs::path& path, const std::vector<std::string>& header) : out_(path) {
    if (!out_) fail(ErrorKind::InvalidConfig, "cannot write " + path.string());
    out_.imbue(std::locale::classic());
    row(header);
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_ndjson(const fs::path& path, const std::vector<nlohmann::ordered_json>& rows) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::InvalidConfig, "cannot write " + path.string());
  out.imbue(std::locale::classic());
  for (const auto& r : rows) out << r.dump() << '\n';
}

std::string option_value(const CLI::Option* o) {
  if (o->count() > 0) {
    std::string joined;
    for (const auto& r : o->results()) joined += (joined.empty() ? "" : ",") + r;
    return joined;
  }
  return o->get_default_str();
}

/// Config echo of the active subcommand in the format read by --config.
void write_manifest(const fs::path& dir, const CLI::App& app, const CLI::App& sub, double elapsed) {
  std::ofstream out(dir / "manifest.txt");
  out.imbue(std::locale::classic());
  out << "tsrmlab_version=\"" << version << "\"\n";
  out << "elapsed_s=" << fmt(elapsed) << "\n";
  for (const CLI::Option* o : app.get_options())
    if (o->get_single_name() == "threads") out << "threads=" << option_value(o) << "\n";
  out << "[" << sub.get_name() << "]\n";
  for (const CLI::Option* o : sub.get_options()) {
    const std::string name = o->get_single_name();
    if (name == "help" || name == "out") continue;
    out << name << "=\"" << option_value(o) << "\"\n";
  }
  out << "out=\"" << dir.string() << "\"\n";
}

fs::path prepare_out(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

unsigned threads_from(int requested) { return resolve_threads(requested); }

// ---------------------------------------------------------------------------
// Commands

struct SkeletonArgs {
  int m = 6;
  double h_hi = 2.0;
  std::string h_lo = "auto";
  int x_level = 0;
  unsigned substeps = 1;
  int bridge = 0;
};

void add_skeleton_options(CLI::App* app, SkeletonArgs& a) {
  app->add_option("--m", a.m, "dyadic level of the skeleton");
  app->add_option("--h-hi", a.h_hi, "top of the start heights");
  app->add_option("--h-lo", a.h_lo, "bottom of the start heights (auto: barrier minimum)");
  app->add_option("--x-level", a.x_level, "dyadic exponent of start abscissae (0: same as m)");
  app->add_option("--substeps", a.substeps, "Gaussian substeps per grid step");
  app->add_option("--bridge", a.bridge, "1: Brownian-bridge crossing tests");
}

SkeletonOptions skeleton_options(const SkeletonArgs& a, double v) {
  SkeletonOptions o;
  o.v = v;
  o.h_hi = a.h_hi;
  if (a.h_lo != "auto") o.h_lo = parse_real(a.h_lo, "h-lo");
  if (a.x_level > 0) o.x_level = a.x_level;
  o.substeps = std::max(1u, a.substeps);
  o.coalescing.sampling.bridge_correction = a.bridge != 0;
  return o;
}

int run_sample_rab(const BarrierSpec& bs, double x, double h, int paths, int bridge, int stride, std::uint64_t seed,
                   const fs::path& out) {
  const Barrier b = build_barrier(bs);
  SamplingOptions so;
  so.bridge_correction = bridge != 0;
  Csv csv(out / "samples.csv", {"path", "x", "value"});
  std::vector<nlohmann::ordered_json> info;
  const Grid& g = b.grid();
  for (int k = 0; k < paths; ++k) {
    const NoisePath w = sample_bm(g, bs.v, 0.0, mix_seed(seed, static_cast<std::uint64_t>(k)));
    const RabPath p = sample_rab(b, x, h, w, so);
    for (std::size_t i = p.start_index; i < p.end_index(); i += static_cast<std::size_t>(std::max(1, stride)))
      csv.row({std::to_string(k), fmt(g.x(i)), fmt(p.at(i))});
    nlohmann::ordered_json j;
    j["path"] = k;
    j["absorbed_x"] = p.absorbed_at ? nlohmann::ordered_json(g.x(*p.absorbed_at)) : nlohmann::ordered_json();
    j["first_contact_x"] =
        p.first_hit_before_chi ? nlohmann::ordered_json(g.x(*p.first_hit_before_chi)) : nlohmann::ordered_json();
    info.push_back(j);
  }
  write_ndjson(out / "paths.ndjson", info);
  return exit_ok;
}

int run_build_lines(const BarrierSpec& bs, const SkeletonArgs& sa, std::uint64_t seed, const fs::path& out) {
  const Barrier b = build_barrier(bs);
  const Skeleton s(b, sa.m, seed, skeleton_options(sa, bs.v));
  const Grid& g = s.grid();
  const auto& sys = s.system();
  std::vector<nlohmann::ordered_json> rows;
  for (const auto& st : s.starts()) {
    const LineRecord& l = sys.line(st.line);
    nlohmann::ordered_json j;
    j["line"] = st.line;
    j["x"] = g.x(st.column);
    j["h"] = st.h;
    j["level"] = st.level;
    j["merge_x"] = l.merged() ? nlohmann::ordered_json(g.x(l.omega)) : nlohmann::ordered_json();
    j["merges_into"] = l.merged() ? nlohmann::ordered_json(l.nu) : nlohmann::ordered_json();
    j["absorbed_x"] = l.absorbed_at ? nlohmann::ordered_json(g.x(*l.absorbed_at)) : nlohmann::ordered_json();
    rows.push_back(j);
  }
  write_ndjson(out / "skeleton.ndjson", rows);
  Csv csv(out / "nodes.csv", {"x", "value", "line"});
  for (std::size_t c = 0; c < s.columns(); ++c)
    for (const auto& node : sys.column(c)) csv.row({fmt(g.x(c)), fmt(node.value), std::to_string(node.owner)});
  return exit_ok;
}

int run_backward(const BarrierSpec& bs, const SkeletonArgs& sa, double x, double h, std::uint64_t seed,
                 const fs::path& out) {
  const Barrier b = build_barrier(bs);
  const Skeleton s(b, sa.m, seed, skeleton_options(sa, bs.v));
  const Grid& g = s.grid();
  const std::size_t c = s.column_of(x);
  Csv csv(out / "backward.csv", {"y", "backward", "forward"});
  for (std::size_t y = 0; y < g.n(); ++y) {
    const std::string back = y <= c ? fmt(s.backward(x, h, g.x(y))) : "";
    const std::string fwd = y >= c ? fmt(s.forward(x, h, g.x(y)).value) : "";
    csv.row({fmt(g.x(y)), back, fwd});
  }
  return exit_ok;
}

int run_tsrm(const BarrierSpec& bs, const SkeletonArgs& sa, const std::string& times, int seeds, int snapshots,
             std::uint64_t seed, unsigned threads, const fs::path& out) {
  const Barrier b = build_barrier(bs);
  const auto ts = parse_times(times);
  if (!std::is_sorted(ts.begin(), ts.end())) fail(ErrorKind::InvalidConfig, "field times: must be increasing");
  if (seeds < 1) fail(ErrorKind::InvalidConfig, "field seeds: must be positive");
  const SkeletonOptions so = skeleton_options(sa, bs.v);
  struct Run {
    std::vector<TimePoint> points;
    std::vector<std::uint8_t> ok;
    std::vector<std::vector<double>> local;
  };
  auto runs = parallel_map<Run>(static_cast<std::size_t>(seeds), threads, [&](std::size_t k) {
    const Skeleton s(b, sa.m, mix_seed(seed, k), so);
    Run r;
    for (double t : ts) {
      try {
        r.points.push_back(invert_time(s, t));
        r.ok.push_back(1);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::TimeOutOfRange) throw;
        const double nan = std::numeric_limits<double>::quiet_NaN();
        r.points.push_back({nan, nan, nan, nan, 0});
        r.ok.push_back(0);
      }
      if (snapshots && k == 0) r.local.push_back(local_time_profile(s, t));
    }
    return r;
  });
  Csv csv(out / "paths.csv", {"seed", "t", "X", "H", "residual"});
  std::vector<double> mean_abs, n_ok, log_t, log_m;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < runs.size(); ++k) {
      const auto& p = runs[k].points[i];
      csv.row({std::to_string(k), fmt(ts[i]), fmt(p.X), fmt(p.H), fmt(p.residual)});
      if (runs[k].ok[i]) {
        sum += std::abs(p.X);
        ++n;
      }
    }
    mean_abs.push_back(n ? sum / static_cast<double>(n) : std::numeric_limits<double>::quiet_NaN());
    n_ok.push_back(static_cast<double>(n));
    if (n && ts[i] > 0 && mean_abs.back() > 0) {
      log_t.push_back(std::log(ts[i]));
      log_m.push_back(std::log(mean_abs.back()));
    }
  }
  nlohmann::ordered_json sum;
  sum["times"] = ts;
  sum["mean_abs_X"] = mean_abs;
  sum["n_ok"] = n_ok;
  sum["seeds"] = seeds;
  if (log_t.size() >= 2) {
    const auto fit = stats::linear_fit(log_t, log_m);
    sum["exponent"] = fit.slope;
    sum["exponent_se"] = fit.slope_se;
  }
  write_ndjson(out / "summary.ndjson", {sum});
  if (snapshots) {
    Csv lt(out / "local_time.csv", {"t", "x", "L"});
    const Grid& g = b.grid();
    for (std::size_t i = 0; i < ts.size(); ++i)
      for (std::size_t c = 0; c < g.n(); ++c) lt.row({fmt(ts[i]), fmt(g.x(c)), fmt(runs[0].local[i][c])});
  }
  return exit_ok;
}

struct ValidateArgs {
  std::string experiment;
  std::size_t trials = 10000;
  double delta = 0.1, eps = 1.0;
  double x = 0.0, h = 0.5, hp = 0.6, y = 1.0;
  double q = 0.0, qp = 1.0, K = 1.0;
  int p = 6;
  std::size_t bins = 50;
  double a = -0.5, b = 0.5;
  std::string dx_list = "0.01,0.001,0.0001";
  std::string regime = "reflecting";
  std::string settings = "0.1/1,0.1/0.5,0.05/1,0.05/0.5";
  int m = 7;
  int bridge = 1;
};

int run_validate(BarrierSpec bs, const ValidateArgs& va, std::uint64_t seed, unsigned threads, const fs::path& out) {
  McOptions opt;
  opt.threads = threads;
  opt.bridge_correction = va.bridge != 0;
  const std::string& e = va.experiment;
  if (bs.dx == "auto") bs.dx = e == "three-bm" ? "0.0001" : "0.001";
  McReport r;
  auto regime = [&] {
    if (va.regime == "reflecting") return ThreeLinesRegime::reflecting;
    if (va.regime == "above_barrier") return ThreeLinesRegime::above_barrier;
    fail(ErrorKind::InvalidConfig, "field regime: expected reflecting or above_barrier");
  };
  if (e == "three-bm") {
    r = validate_three_bm(va.delta, va.eps, bs.v, va.trials, seed, parse_real(bs.dx, "dx"), opt);
  } else if (e == "pair") {
    r = validate_pair_noncoalescence(build_barrier(bs), bs.v, va.x, va.h, va.hp, va.y, va.trials, seed, opt);
  } else if (e == "line-count") {
    r = validate_line_count(build_barrier(bs), bs.v, va.q, va.qp, va.K, va.p, va.trials, seed, opt);
  } else if (e == "no-atom") {
    r = validate_no_atom(build_barrier(bs), bs.v, va.x, va.h, va.y, va.trials, va.bins, seed, opt);
  } else if (e == "nice-hit") {
    const auto dxs = parse_list(va.dx_list, "dx-list");
    const double finest = *std::min_element(dxs.begin(), dxs.end());
    BarrierFactory make = [&](double dx) { return build_barrier(bs, dx, finest); };
    r = validate_nice_hit(make, bs.v, va.x, va.h, va.trials, dxs, seed, opt);
  } else if (e == "no-stick") {
    r = validate_no_stick(build_barrier(bs), bs.v, va.a, va.b, va.x, va.h, va.trials, seed, opt);
  } else if (e == "three-lines") {
    r = validate_three_lines(build_barrier(bs), bs.v, va.x, va.h, va.delta, va.eps, va.trials, seed, regime(), opt);
  } else if (e == "three-lines-scaling") {
    std::vector<std::pair<double, double>> settings;
    for (const auto& tok : split(va.settings, ',')) {
      const auto de = split(tok, '/');
      if (de.size() != 2) fail(ErrorKind::InvalidConfig, "field settings: expected delta/eps pairs");
      settings.emplace_back(parse_real(de[0], "settings"), parse_real(de[1], "settings"));
    }
    r = validate_three_lines_scaling(build_barrier(bs), bs.v, va.x, va.h, settings, va.trials, seed, regime(), opt);
  } else if (e == "reversal") {
    r = validate_reversal(build_barrier(bs), bs.v, va.x, va.h, va.y, va.trials, seed, va.m, opt);
  } else {
    fail(ErrorKind::InvalidConfig, "field experiment: unknown experiment '" + e + "'");
  }
  write_ndjson(out / "report.ndjson", {to_json(r)});
  std::cout << r.tag << ": estimate " << fmt(r.estimate) << " ci95 " << fmt(r.ci95) << " bound " << fmt(r.bound)
            << " -> " << to_string(r.verdict) << "\n";
  return r.verdict == Verdict::fail ? exit_verdict : exit_ok;
}

int run_barrier_check(const BarrierSpec& bs, const std::string& eps, std::size_t good_trials, double growth,
                      std::uint64_t seed, unsigned threads, const fs::path& out) {
  const Barrier b = build_barrier(bs);
  const auto nv = is_nice_numeric(b, parse_list(eps, "eps"));
  nlohmann::ordered_json j;
  j["nice"] = nv.nice;
  j["eps"] = nv.eps;
  nlohmann::ordered_json w = nlohmann::ordered_json::array();
  for (const auto& x : nv.witness) w.push_back(x ? nlohmann::ordered_json(*x) : nlohmann::ordered_json());
  j["witness"] = w;
  j["eps_star"] = nv.eps_star;
  j["lipschitz"] = lipschitz_constant(b);
  if (good_trials > 0) {
    GoodOptions go;
    go.v = bs.v;
    go.threads = threads;
    const auto ge = is_good_numeric(b, good_trials, growth, seed, go);
    j["hit_prob_right"] = ge.hit_prob_right;
    j["hit_prob_left"] = ge.hit_prob_left;
    j["good_ci95"] = ge.ci95;
    j["good_consistent"] = ge.good_consistent;
  }
  write_ndjson(out / "barrier_check.ndjson", {j});
  std::cout << (nv.nice ? "nice" : "not nice") << "\n";
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reflected/absorbed Brownian line systems and the true self-repelling motion"};
  app.set_help_flag("--help", "print this help and exit");
  app.set_config("--config", "", "key=value file; flags given on the command line take precedence");
  app.allow_config_extras(true);
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  int threads = 0;
  app.add_option("--threads", threads, "worker threads (0: TSRMLAB_THREADS or all cores)");

  BarrierSpec bs, vbs;
  SkeletonArgs sa;
  ValidateArgs va;
  std::uint64_t seed = 1;
  std::string out = "runs/out";
  double x = 0.0, h = 0.5;
  int paths = 10, bridge = 0, stride = 1, seeds = 20, snapshots = 0;
  std::string times = "1:64:geom";
  std::string eps = "0.5,1";
  std::size_t good_trials = 0;
  double growth = 2.0;

  auto common = [&](CLI::App* s, BarrierSpec& spec) {
    s->configurable();
    s->option_defaults()->always_capture_default();
    add_barrier_options(s, spec);
    s->add_option("--seed", seed, "master seed");
    s->add_option("--out", out, "output directory");
  };

  auto* rab = app.add_subcommand("sample-rab", "sample RAB paths");
  common(rab, bs);
  rab->add_option("--x", x);
  rab->add_option("--h", h);
  rab->add_option("--paths", paths);
  rab->add_option("--bridge", bridge);
  rab->add_option("--stride", stride);

  auto* lines = app.add_subcommand("build-lines", "build the dyadic forward-line skeleton");
  common(lines, bs);
  add_skeleton_options(lines, sa);

  auto* back = app.add_subcommand("backward", "backward and forward lines through (x, h)");
  common(back, bs);
  add_skeleton_options(back, sa);
  back->add_option("--x", x);
  back->add_option("--h", h);

  auto* tsrm = app.add_subcommand("tsrm", "self-repelling motion paths");
  common(tsrm, bs);
  add_skeleton_options(tsrm, sa);
  tsrm->add_option("--times", times, "start:stop:lin:N | start:stop:geom | list");
  tsrm->add_option("--seeds", seeds);
  tsrm->add_option("--snapshots", snapshots, "1: local time profiles of the first seed");

  auto* val = app.add_subcommand("validate", "Monte Carlo checks");
  common(val, vbs);
  val->add_option("experiment", va.experiment,
                  "three-bm | pair | line-count | no-atom | nice-hit | no-stick | three-lines | three-lines-scaling | reversal")
      ->required();
  val->add_option("--trials", va.trials);
  val->add_option("--delta", va.delta);
  val->add_option("--eps", va.eps);
  val->add_option("--x", va.x);
  val->add_option("--h", va.h);
  val->add_option("--hp", va.hp);
  val->add_option("--y", va.y);
  val->add_option("--q", va.q);
  val->add_option("--qp", va.qp);
  val->add_option("--K", va.K);
  val->add_option("--p", va.p);
  val->add_option("--bins", va.bins);
  val->add_option("--a", va.a);
  val->add_option("--b", va.b);
  val->add_option("--dx-list", va.dx_list);
  val->add_option("--regime", va.regime);
  val->add_option("--settings", va.settings, "delta/eps pairs");
  val->add_option("--m", va.m);
  val->add_option("--bridge", va.bridge);

  auto* check = app.add_subcommand("barrier-check", "niceness and goodness of a barrier");
  common(check, bs);
  check->add_option("--eps", eps, "comma-separated eps list");
  check->add_option("--good-trials", good_trials, "0 skips the goodness estimate");
  check->add_option("--growth", growth);

  // Per-command defaults that differ from the shared ones.
  val->get_option("--window")->default_val("-1:1");
  val->get_option("--dx")->default_val("auto");

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const unsigned nthreads = threads_from(threads);
    const fs::path dir = prepare_out(out);
    int code = exit_ok;
    CLI::App* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    if (name == "sample-rab") code = run_sample_rab(bs, x, h, paths, bridge, stride, seed, dir);
    else if (name == "build-lines") code = run_build_lines(bs, sa, seed, dir);
    else if (name == "backward") code = run_backward(bs, sa, x, h, seed, dir);
    else if (name == "tsrm") code = run_tsrm(bs, sa, times, seeds, snapshots, seed, nthreads, dir);
    else if (name == "validate") code = run_validate(vbs, va, seed, nthreads, dir);
    else if (name == "barrier-check") code = run_barrier_check(bs, eps, good_trials, growth, seed, nthreads, dir);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    write_manifest(dir, app, *sub, elapsed);
    return code;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_error;
  }
}
