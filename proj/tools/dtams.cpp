#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <sstream>

#include <CLI11.hpp>

#include "dtams/error.hpp"
#include "dtams/pipeline.hpp"

using namespace dtams;

namespace {

std::vector<std::uint8_t> read_bytes(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& b) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path);
  os.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
}

// "gaussian:0.0001,0.0004" expands to one spec per ratio
std::vector<AttackSpec> parse_attacks(const std::vector<std::string>& tokens) {
  std::vector<AttackSpec> out;
  for (const auto& tok : tokens) {
    if (tok == "none") {
      out.push_back({});
      continue;
    }
    const auto colon = tok.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::invalid_argument, "bad attack: " + tok);
    std::stringstream ss(tok.substr(colon + 1));
    std::string r;
    while (std::getline(ss, r, ',')) out.push_back(AttackSpec::parse(tok.substr(0, colon + 1) + r));
  }
  return out;
}

template <class F>
void to_file_or_stdout(const std::string& path, F&& f) {
  if (path.empty() || path == "-") {
    f(std::cout);
    return;
  }
  std::ofstream os(path);
  if (!os) throw Error(ErrorKind::io, "cannot open " + path);
  f(os);
}

struct Common {
  EmbedParams p;
  std::vector<int> window{10, 60};

  void add(CLI::App* app) {
    app->add_option("--seed", p.seed, "master seed")->capture_default_str();
    app->add_option("--g", p.g, "bits per symbol")->capture_default_str()->check(CLI::Range(1, 8));
    app->add_option("--n", p.n, "number of embedding timesteps")->capture_default_str();
    app->add_option("--w", p.w, "blend coefficient")->capture_default_str();
    app->add_option("--margin", p.margin, "interior placement margin")->capture_default_str();
    app->add_option("--height", p.height)->capture_default_str();
    app->add_option("--width", p.width)->capture_default_str();
    app->add_option("--channels", p.channels)->capture_default_str()->check(CLI::IsMember({1, 3}));
    app->add_option("--window", window, "candidate window lo hi")->expected(2)->capture_default_str();
    app->add_flag("--amplify", p.amplify, "weight scores by squared downstream gain");
  }
  void finish() { p.window = {window[0], window[1]}; }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"dtams: diffusion-trajectory steganography toolkit"};
  app.require_subcommand(1);

  Common ce;
  std::string key_out, payload_path, stego_out, key_in, trace;
  bool no_refine = false, no_comp = false;
  auto* emb = app.add_subcommand("embed", "hide a payload in a generated image");
  ce.add(emb);
  emb->add_option("--key-out", key_out)->required();
  emb->add_option("--payload", payload_path)->required()->check(CLI::ExistingFile);
  emb->add_option("--stego-out", stego_out)->required();
  emb->add_option("--timesteps", ce.p.timesteps, "explicit T*, overrides selection");
  emb->add_option("--key-in", key_in, "take seed, g and T* from a select-timesteps key");
  emb->add_flag("--no-refine", no_refine);
  emb->add_flag("--no-compensate", no_comp);
  emb->add_option("--trace", trace, "prefix for PGD and compensation loss traces (CSV)");

  std::string x_key, x_stego, x_out;
  bool x_force = false;
  auto* ext = app.add_subcommand("extract", "recover a payload from a stego image");
  ext->add_option("--key", x_key)->required()->check(CLI::ExistingFile);
  ext->add_option("--stego", x_stego)->required()->check(CLI::ExistingFile);
  ext->add_option("--out", x_out)->required();
  ext->add_flag("--ignore-fingerprint", x_force);

  Common cs;
  std::string s_csv, s_key, s_payload;
  auto* sel = app.add_subcommand("select-timesteps", "score the candidate window and pick T*");
  cs.add(sel);
  sel->add_option("--payload", s_payload, "payload for symbol frequencies (uniform if absent)");
  sel->add_option("--csv", s_csv, "cost table output (stdout if absent)");
  sel->add_option("--key-out", s_key, "key file receiving the chosen T*");

  Common cv;
  std::vector<std::string> attacks{"none"};
  int seeds = 20;
  std::uint64_t seed_base = 1;
  std::string v_csv, v_md;
  bool sweep = false;
  int n_lo = 0, n_hi = 8;
  auto* ev = app.add_subcommand("evaluate", "distortion battery or capacity sweep");
  cv.add(ev);
  ev->add_option("--attacks", attacks, "e.g. gaussian:0.0001,0.0004 sp:0.0001 jpeg:90,70");
  ev->add_option("--seeds", seeds)->capture_default_str();
  ev->add_option("--seed-base", seed_base)->capture_default_str();
  ev->add_option("--csv", v_csv);
  ev->add_option("--md", v_md);
  ev->add_flag("--sweep", sweep, "capacity sweep over n instead of attacks");
  ev->add_option("--n-lo", n_lo)->capture_default_str();
  ev->add_option("--n-hi", n_hi)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    std::cerr << "error: " << kind_name(ErrorKind::invalid_argument) << ": " << e.what() << "\n";
    return 2;
  }

  try {
    if (*emb) {
      ce.finish();
      EmbedParams p = ce.p;
      if (!key_in.empty()) {
        const MappingKey k = load_key(key_in);
        p.seed = k.master_seed;
        p.g = k.g;
        p.timesteps = k.timesteps;
      }
      p.refine = !no_refine;
      p.compensate = !no_comp;
      p.keep_traces = !trace.empty();
      const auto r = embed(read_bytes(payload_path), p);
      save_key(key_out, r.key);
      write_stego(stego_out, r.package);
      if (!trace.empty()) {
        for (const auto& t : r.diag.pgd_traces)
          to_file_or_stdout(trace + "_pgd_t" + std::to_string(t.t) + "_c" + std::to_string(t.channel) + ".csv",
                            [&](std::ostream& os) { write_trace_csv(os, t.rows); });
        for (const auto& t : r.diag.comp_traces)
          to_file_or_stdout(trace + "_comp_t" + std::to_string(t.t) + ".csv",
                            [&](std::ostream& os) { write_trace_csv(os, t.rows); });
      }
      std::cerr << "embedded " << r.key.payload_bytes << " bytes over " << r.diag.fired
                << " timesteps; refinement reverted " << r.diag.pgd_reverted
                << " elements; compensation fell back " << r.diag.compensation_fallbacks << " times\n";
    } else if (*ext) {
      const auto key = load_key(x_key);
      const auto pkg = read_stego(x_stego);
      if (pkg.fingerprint.empty()) std::cerr << "warning: stego carries no key fingerprint\n";
      const auto r = extract(pkg, key, {.check_fingerprint = !x_force});
      write_bytes(x_out, r.payload);
      if (r.erasures) std::cerr << "erasures: " << r.erasures << "\n";
    } else if (*sel) {
      cs.finish();
      EmbedParams p = cs.p;
      std::vector<double> p_B(std::size_t{1} << p.g, 1.0 / (1 << p.g));
      if (!s_payload.empty()) {
        const auto sy = bytes_to_symbols(read_bytes(s_payload), p.g);
        if (sy.size()) p_B = frequency_table(sy);
      }
      const auto table = score_for_params(p, p_B);
      const auto ts = select_subset(table, p.n);
      to_file_or_stdout(s_csv, [&](std::ostream& os) {
        os << "t,cost,amplification,score,selected\n";
        os.precision(17);
        for (const auto& r : table.rows)
          os << r.t << "," << r.cost << "," << r.amplification << "," << r.score << ","
             << (std::find(ts.begin(), ts.end(), r.t) != ts.end()) << "\n";
      });
      if (!s_key.empty()) {
        MappingKey k;
        k.master_seed = p.seed;
        k.schedule = {p.schedule.num_steps, to_f32(p.schedule.a_at_T), to_f32(p.schedule.a_at_1),
                      to_f32(p.schedule.sigma)};
        k.height = p.height;
        k.width = p.width;
        k.channels = p.channels;
        k.g = p.g;
        k.timesteps = ts;
        k.w = to_f32(p.w);
        k.margin = to_f32(p.margin);
        k.eps = to_f32(0.25);
        save_key(s_key, k);
      }
    } else if (*ev) {
      cv.finish();
      std::vector<std::uint64_t> sd;
      for (int i = 0; i < seeds; ++i) sd.push_back(seed_base + i);
      if (sweep) {
        const auto rows = sweep_capacity(cv.p, n_lo, n_hi, sd);
        to_file_or_stdout(v_csv, [&](std::ostream& os) { write_sweep_csv(os, rows); });
        if (!v_md.empty()) to_file_or_stdout(v_md, [&](std::ostream& os) { write_sweep_markdown(os, rows); });
      } else {
        const auto rows = evaluate(cv.p, parse_attacks(attacks), sd);
        to_file_or_stdout(v_csv, [&](std::ostream& os) { write_report_csv(os, rows); });
        if (!v_md.empty()) to_file_or_stdout(v_md, [&](std::ostream& os) { write_report_markdown(os, rows); });
      }
    }
  } catch (const Error& e) {
    std::cerr << "error: " << kind_name(e.kind()) << ": " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
