// tnale_cli: synthetic data generation, structure search, landscape
// diagnostics and trace reporting.
//
//   tnale_cli generate --template tr --order 8 --dim 3 --rank-lo 1 --rank-hi 4 --permute --seed 7 --out d/
//   tnale_cli search --algo tnale --input d/target.tnsr --template tr --truth d/truth.json --out run/
//   tnale_cli landscape --input d/target.tnsr --template tr --center-ranks 2,2,2,2 --radius 2 --out land/
//   tnale_cli report run_a/ run_b/ --out summary/
//
// Exit codes: 0 ok, 1 runtime failure, 2 usage error.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "tnale/tnale.hpp"

namespace fs = std::filesystem;
using tnale::io::Json;

namespace {

constexpr const char* kVersion = "1.0.0";

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flags given in --config are appended unless already on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
    auto it = std::find(args.begin(), args.end(), "--config");
    std::string path;
    if (it != args.end()) {
        if (it + 1 == args.end()) throw UsageError("--config needs a file");
        path = *(it + 1);
        args.erase(it, it + 2);
    } else {
        for (auto a = args.begin(); a != args.end(); ++a)
            if (a->rfind("--config=", 0) == 0) {
                path = a->substr(9);
                args.erase(a);
                break;
            }
    }
    if (path.empty()) return args;

    Json cfg;
    try {
        cfg = tnale::io::read_json(path);
    } catch (const tnale::Error& e) {
        throw UsageError(e.what());
    }
    if (!cfg.is_object()) throw UsageError("--config must hold a JSON object");
    auto present = [&](const std::string& flag) {
        return std::any_of(args.begin(), args.end(),
                           [&](const std::string& a) { return a == flag || a.rfind(flag + "=", 0) == 0; });
    };
    for (const auto& [key, value] : cfg.items()) {
        const std::string flag = "--" + key;
        if (present(flag)) continue;
        if (value.is_boolean()) {
            if (value.get<bool>()) args.push_back(flag);
        } else if (value.is_array()) {
            for (const auto& v : value) {
                args.push_back(flag);
                args.push_back(v.is_string() ? v.get<std::string>() : v.dump());
            }
        } else {
            args.push_back(flag);
            args.push_back(value.is_string() ? value.get<std::string>() : value.dump());
        }
    }
    return args;
}

Json echo_options(const CLI::App* app) {
    Json j = Json::object();
    for (const CLI::Option* opt : app->get_options()) {
        if (opt->get_name() == "--help" || opt->get_name() == "-h") continue;
        std::string name = opt->get_single_name();
        if (opt->get_type_size() == 0) {
            j[name] = opt->count() > 0;
        } else if (opt->get_expected_max() > 1 || opt->get_items_expected_max() > 1) {
            j[name] = opt->results();
        } else {
            const auto& r = opt->results();
            j[name] = r.empty() ? opt->get_default_str() : r.back();
        }
    }
    return j;
}

struct Manifest {
    Manifest(std::string cmd, std::uint64_t s) : command(std::move(cmd)), seed(s) {}

    std::string command;
    std::uint64_t seed = 0;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    std::vector<std::string> outputs;
    Json extra = Json::object();

    void write(const fs::path& dir, const CLI::App* app) const {
        Json j;
        j["command"] = command;
        j["config"] = echo_options(app);
        j["seed"] = seed;
        j["tool_version"] = kVersion;
        j["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        j["outputs"] = outputs;
        for (const auto& [k, v] : extra.items()) j[k] = v;
        tnale::io::write_json(dir / "manifest.json", j);
    }
};

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw tnale::Error("cannot create " + dir.string() + ": " + ec.message());
}

// Template of `kind` whose physical vertices take the target's mode sizes.
tnale::TnStructure template_for_target(const std::string& kind, const tnale::DenseTensor& target) {
    const tnale::TnStructure base = tnale::template_adjacency({tnale::parse_topology(kind), target.order()}, 1);
    std::vector<std::size_t> phys = base.phys_dims();
    for (std::size_t v = 0; v < target.order(); ++v) phys[v] = target.dims()[v];
    return tnale::TnStructure(std::move(phys), base.template_edges());
}

std::vector<std::size_t> parse_list(const std::string& s) {
    std::vector<std::size_t> out;
    std::stringstream ss(s);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
        try {
            out.push_back(std::stoull(cell));
        } catch (const std::exception&) {
            throw UsageError("not a list of integers: " + s);
        }
    }
    return out;
}

const std::vector<std::string> kTopologies{"tr", "tw", "peps", "ht", "mera", "fc"};

// ---------------------------------------------------------------- generate

struct GenerateArgs {
    std::string topology;
    std::size_t order = 0;
    std::size_t dim = 3;
    std::size_t rank_lo = 1;
    std::size_t rank_hi = 4;
    bool permute = false;
    double core_std = 1.0;
    std::uint64_t seed = 0;
    std::string out;
};

void add_generate(CLI::App& app, GenerateArgs& a) {
    app.add_option("--template", a.topology, "Topology")->required()->check(CLI::IsMember(kTopologies));
    app.add_option("--order", a.order, "Number of physical vertices")->required()->check(CLI::PositiveNumber);
    app.add_option("--dim", a.dim, "Physical dimension")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--rank-lo", a.rank_lo, "Smallest rank")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--rank-hi", a.rank_hi, "Largest rank")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_flag("--permute", a.permute, "Relabel physical vertices at random");
    app.add_option("--core-std", a.core_std, "Core entry standard deviation")->capture_default_str();
    app.add_option("--seed", a.seed, "Seed")->capture_default_str();
    app.add_option("--out", a.out, "Output directory")->required();
}

int run_generate(const GenerateArgs& a, const CLI::App* app) {
    if (a.rank_hi < a.rank_lo) throw UsageError("--rank-hi must be >= --rank-lo");
    Manifest m{"generate", a.seed};
    tnale::GenSpec spec;
    spec.topology = {tnale::parse_topology(a.topology), a.order};
    spec.phys_dim = a.dim;
    spec.rank_lo = a.rank_lo;
    spec.rank_hi = a.rank_hi;
    spec.permute = a.permute;
    spec.core_std = a.core_std;
    spec.seed = a.seed;
    const auto inst = tnale::generate(spec);

    const fs::path out(a.out);
    ensure_dir(out);
    tnale::io::save_tnsr(out / "target.tnsr", inst.target);
    tnale::io::write_json(out / "truth.json", tnale::io::structure_to_json(inst.truth));
    m.outputs = {(out / "target.tnsr").string(), (out / "truth.json").string(), (out / "manifest.json").string()};

    m.extra["spec"] = {{"template", a.topology}, {"order", a.order},     {"dim", a.dim},
                       {"rank_lo", a.rank_lo},   {"rank_hi", a.rank_hi}, {"permute", a.permute},
                       {"core_std", a.core_std}};
    m.extra["truth_ranks"] = inst.truth.ranks();
    m.extra["permutation"] = inst.truth_perm.map();
    m.extra["truth_param_count"] = tnale::param_count(inst.truth);
    m.write(out, app);
    return 0;
}

// ------------------------------------------------------------------ search

struct SearchArgs {
    std::string algo;
    std::string input;
    std::string topology;
    std::string truth;
    std::string out;
    double lambda = 200.0;
    std::size_t r1 = 2, r2 = 1, l0 = 2, l = 30, d = 1;
    std::size_t rank_lo = 1, rank_hi = 7;
    bool permutation_search = false;
    std::size_t restart_patience = 5;
    std::size_t samples = 60;
    std::size_t tnls_iters = 30;
    std::size_t tnls_radius = 2;
    double radius_decay = 0.9;
    std::optional<std::size_t> budget;
    std::size_t workers = 1;
    double lr = 0.01;
    std::size_t solver_iters = 3000;
    std::size_t patience = 200;
    std::uint64_t seed = 0;
};

void add_search(CLI::App& app, SearchArgs& a) {
    app.add_option("--algo", a.algo, "tnale, tnls or brute")->required()->check(CLI::IsMember({"tnale", "tnls", "brute"}));
    app.add_option("--input", a.input, "Target tensor (TNSR)")->required();
    app.add_option("--template", a.topology, "Topology")->required()->check(CLI::IsMember(kTopologies));
    app.add_option("--truth", a.truth, "Ground-truth structure JSON for Eff. and success");
    app.add_option("--out", a.out, "Output directory")->required();
    app.add_option("--lambda", a.lambda, "RSE weight")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--r1", a.r1, "Initialization radius")->capture_default_str();
    app.add_option("--r2", a.r2, "Search radius")->capture_default_str();
    app.add_option("--l0", a.l0, "Initialization iterations")->capture_default_str();
    app.add_option("--l", a.l, "Search iterations")->capture_default_str();
    app.add_option("--d", a.d, "Round-trips per sweep")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--rank-lo", a.rank_lo, "Smallest rank")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--rank-hi", a.rank_hi, "Largest rank")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_flag("--permutation-search", a.permutation_search, "Search vertex relabellings too");
    app.add_option("--restart-patience", a.restart_patience, "Stagnant sweeps before a restart")->capture_default_str();
    app.add_option("--samples", a.samples, "TNLS samples per iteration")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--tnls-iters", a.tnls_iters, "TNLS iterations")->capture_default_str();
    app.add_option("--tnls-radius", a.tnls_radius, "TNLS initial radius")->capture_default_str();
    app.add_option("--radius-decay", a.radius_decay, "TNLS radius decay")->capture_default_str();
    app.add_option("--budget", a.budget, "Cap on explicit evaluations")->check(CLI::PositiveNumber);
    app.add_option("--workers", a.workers, "Parallel evaluations")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--lr", a.lr, "Adam learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--solver-iters", a.solver_iters, "Iterations per evaluation")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--patience", a.patience, "Solver patience")->capture_default_str();
    app.add_option("--seed", a.seed, "Seed")->capture_default_str();
}

int run_search(const SearchArgs& a, const CLI::App* app) {
    if (a.rank_hi < a.rank_lo) throw UsageError("--rank-hi must be >= --rank-lo");
    Manifest m{"search", a.seed};
    const tnale::DenseTensor target = tnale::io::load_tnsr(a.input);
    const tnale::TnStructure tmpl = template_for_target(a.topology, target);
    std::optional<tnale::TnStructure> truth;
    if (!a.truth.empty()) truth = tnale::io::structure_from_json(tnale::io::read_json(a.truth));

    tnale::ObjectiveConfig oc;
    oc.lambda = a.lambda;
    oc.solver.learning_rate = a.lr;
    oc.solver.max_iters = a.solver_iters;
    oc.solver.patience = a.patience;
    oc.solver.seed = a.seed;
    tnale::Evaluator ev(target, oc);
    ev.set_budget(a.budget);
    ev.set_workers(a.workers);

    tnale::SearchTrace trace;
    if (a.algo == "tnale") {
        tnale::TnaleConfig c;
        c.r1 = a.r1;
        c.r2 = a.r2;
        c.l0 = a.l0;
        c.l = a.l;
        c.ale.round_trips = a.d;
        c.ale.rank_lo = a.rank_lo;
        c.ale.rank_hi = a.rank_hi;
        c.ale.permutation_search = a.permutation_search;
        c.restart_patience = a.restart_patience;
        c.seed = a.seed;
        try {
            c.validate();
        } catch (const tnale::Error& e) {
            throw UsageError(e.what());
        }
        trace = tnale::tnale(ev, tmpl, c);
    } else if (a.algo == "tnls") {
        tnale::TnlsConfig c;
        c.samples_per_iter = a.samples;
        c.max_iters = a.tnls_iters;
        c.initial_radius = a.tnls_radius;
        c.radius_decay = a.radius_decay;
        c.permutation_search = a.permutation_search;
        c.rank_lo = a.rank_lo;
        c.rank_hi = a.rank_hi;
        c.seed = a.seed;
        try {
            c.validate();
        } catch (const tnale::Error& e) {
            throw UsageError(e.what());
        }
        trace = tnale::tnls(ev, tmpl, c);
    } else {
        std::vector<tnale::VertexPermutation> perms;
        if (a.permutation_search) {
            std::vector<std::size_t> p(tmpl.n_vertices());
            for (std::size_t i = 0; i < p.size(); ++i) p[i] = i;
            do perms.emplace_back(p);
            while (std::next_permutation(p.begin(), p.end()));
        }
        const auto t0 = std::chrono::steady_clock::now();
        bool exhausted = false;
        try {
            trace.final = tnale::brute_force(ev, tmpl, a.rank_lo, a.rank_hi, perms);
        } catch (const tnale::BudgetExhausted&) {
            exhausted = true;
            if (!ev.best_seen()) throw;
            trace.final = *ev.best_seen();
        }
        trace.records = ev.log();
        trace.n_evals = ev.n_evals();
        trace.budget_exhausted = exhausted;
        trace.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    const fs::path out(a.out);
    ensure_dir(out);
    std::map<std::string, tnale::TnStructure> ids;
    {
        std::ofstream os(out / "trace.csv");
        if (!os) throw tnale::FormatError("cannot write " + (out / "trace.csv").string());
        ids = tnale::io::write_trace_csv(os, trace.records);
    }
    Json structures = Json::object();
    for (const auto& [id, s] : ids) structures[id] = tnale::io::structure_to_json(s);
    tnale::io::write_json(out / "structures.json", structures);

    Json r;
    r["algorithm"] = a.algo;
    r["structure"] = tnale::io::structure_to_json(trace.final.structure);
    r["structure_id"] = tnale::io::structure_id(trace.final.structure);
    r["objective"] = trace.final.objective;
    r["rse"] = trace.final.rse;
    r["compression_ratio"] = trace.final.compression_ratio;
    r["n_eval"] = trace.n_evals;
    r["n_eval_to_best"] = trace.final.eval_index;
    r["restarts"] = trace.restarts;
    r["budget_exhausted"] = trace.budget_exhausted;
    if (truth) {
        r["eff"] = tnale::efficiency(trace.final.structure, *truth);
        r["success"] = tnale::success(trace.final, *truth);
        std::optional<std::size_t> first;
        for (const auto& rec : trace.records)
            if (!rec.estimated && tnale::success(rec, *truth)) {
                first = rec.eval_index;
                break;
            }
        r["n_eval_to_success"] = first ? Json(*first) : Json(nullptr);
    }
    r["wall_time_s"] = trace.wall_time_s;
    tnale::io::write_json(out / "result.json", r);

    m.outputs = {(out / "trace.csv").string(), (out / "structures.json").string(), (out / "result.json").string(),
                 (out / "manifest.json").string()};
    m.write(out, app);
    return 0;
}

// --------------------------------------------------------------- landscape

struct LandscapeArgs {
    std::string input;
    std::string topology;
    std::string center_ranks;
    std::string center;
    std::string fixture;
    std::size_t fixture_order = 5;
    std::size_t fixture_size = 5;
    std::size_t radius = 1;
    bool graph_mode = false;
    std::size_t rank_lo = 1, rank_hi = 7;
    double lambda = 200.0;
    double tolerance = 0.1;
    std::size_t spot_checks = 20;
    std::size_t sweeps = 1;
    std::size_t workers = 1;
    std::uint64_t seed = 0;
    std::string out;
};

void add_landscape(CLI::App& app, LandscapeArgs& a) {
    app.add_option("--input", a.input, "Target tensor (TNSR)");
    app.add_option("--template", a.topology, "Topology")->check(CLI::IsMember(kTopologies));
    app.add_option("--center-ranks", a.center_ranks, "Center ranks in edge order, comma separated");
    app.add_option("--center", a.center, "Center structure JSON");
    app.add_option("--fixture", a.fixture, "Synthetic landscape instead of a target")->check(CLI::IsMember({"separable"}));
    app.add_option("--fixture-order", a.fixture_order, "Fixture order")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--fixture-size", a.fixture_size, "Fixture mode size")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--radius", a.radius, "Rank radius")->capture_default_str();
    app.add_flag("--graph-mode", a.graph_mode, "Add a vertex-transposition mode");
    app.add_option("--rank-lo", a.rank_lo, "Smallest rank")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--rank-hi", a.rank_hi, "Largest rank")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--lambda", a.lambda, "RSE weight")->capture_default_str()->check(CLI::NonNegativeNumber);
    app.add_option("--tolerance", a.tolerance, "Relative truncation error for the rank report")->capture_default_str();
    app.add_option("--spot-checks", a.spot_checks, "Reciprocal checks")->capture_default_str();
    app.add_option("--sweeps", a.sweeps, "Fiber sweeps for the min-entry search")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--workers", a.workers, "Parallel evaluations")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--seed", a.seed, "Seed")->capture_default_str();
    app.add_option("--out", a.out, "Output directory")->required();
}

int run_landscape(const LandscapeArgs& a, const CLI::App* app) {
    Manifest m{"landscape", a.seed};
    tnale::DenseTensor grid{tnale::Shape{1}};
    std::vector<std::size_t> start;
    Json spot = nullptr;

    if (!a.fixture.empty()) {
        tnale::Rng rng = tnale::make_rng(a.seed, "landscape-fixture");
        std::uniform_real_distribution<double> u(0.1, 1.0);
        std::vector<std::vector<double>> factors(a.fixture_order, std::vector<double>(a.fixture_size));
        for (auto& f : factors)
            for (double& x : f) x = u(rng);
        grid = tnale::outer_product(factors);
        start.assign(a.fixture_order, 0);
    } else {
        if (a.input.empty() || a.topology.empty()) throw UsageError("--input and --template are required without --fixture");
        if (a.center.empty() == a.center_ranks.empty()) throw UsageError("give exactly one of --center, --center-ranks");
        if (a.rank_hi < a.rank_lo) throw UsageError("--rank-hi must be >= --rank-lo");
        const tnale::DenseTensor target = tnale::io::load_tnsr(a.input);
        const tnale::TnStructure tmpl = template_for_target(a.topology, target);
        tnale::TnStructure center;
        if (!a.center.empty()) {
            center = tnale::io::structure_from_json(tnale::io::read_json(a.center));
        } else {
            const auto ranks = parse_list(a.center_ranks);
            if (ranks.size() != tmpl.searchable_edges().size())
                throw UsageError("--center-ranks needs " + std::to_string(tmpl.searchable_edges().size()) + " values");
            center = tmpl.with_ranks(ranks);
        }
        tnale::ObjectiveConfig oc;
        oc.lambda = a.lambda;
        oc.solver.seed = a.seed;
        tnale::Evaluator ev(target, oc);
        ev.set_workers(a.workers);
        const auto b = tnale::build_landscape(center, a.radius, a.graph_mode, ev, a.rank_lo, a.rank_hi);
        grid = b.tensor;
        start = b.center_index();
        const auto check = tnale::reciprocal_spot_check(b, ev, a.spot_checks, a.seed);
        spot = Json{{"samples", check.samples},
                    {"max_relative_error", check.max_relative_error},
                    {"passed", check.max_relative_error <= 1e-12}};
    }

    const auto brute = tnale::min_entry_brute(grid);
    const auto ale = tnale::ale_min_entry(grid, a.sweeps, start);
    const auto spectra = tnale::unfolding_spectra(grid, a.tolerance);

    const fs::path out(a.out);
    ensure_dir(out);
    tnale::io::save_tnsr(out / "landscape.tnsr", grid);
    Json j = tnale::io::spectra_to_json(spectra, a.tolerance);
    j["dims"] = grid.dims();
    j["min_entry"] = {{"brute_index", brute.index},
                      {"brute_value", brute.value},
                      {"ale_index", ale.index},
                      {"ale_value", ale.value},
                      {"ale_reads", ale.reads},
                      {"agree", ale.index == brute.index}};
    j["spot_check"] = spot;
    tnale::io::write_json(out / "spectra.json", j);
    m.outputs = {(out / "landscape.tnsr").string(), (out / "spectra.json").string(), (out / "manifest.json").string()};
    m.write(out, app);
    return 0;
}

// ------------------------------------------------------------------ report

struct ReportArgs {
    std::vector<std::string> inputs;
    std::string out;
};

void add_report(CLI::App& app, ReportArgs& a) {
    app.add_option("inputs", a.inputs, "Run directories or trace.csv files")->required();
    app.add_option("--out", a.out, "Output directory")->required();
}

struct Run {
    std::string label;
    std::string algorithm;
    std::vector<tnale::io::TraceRow> rows;
    std::optional<Json> result;
};

int run_report(const ReportArgs& a, const CLI::App* app) {
    Manifest m{"report", 0};
    std::vector<fs::path> traces;
    for (const auto& in : a.inputs) {
        const fs::path p(in);
        if (fs::is_directory(p)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::recursive_directory_iterator(p))
                if (e.is_regular_file() && e.path().filename() == "trace.csv") found.push_back(e.path());
            std::sort(found.begin(), found.end());
            traces.insert(traces.end(), found.begin(), found.end());
        } else if (fs::is_regular_file(p)) {
            traces.push_back(p);
        } else {
            throw UsageError("no such input: " + in);
        }
    }
    if (traces.empty()) throw UsageError("no trace.csv found in the inputs");

    std::vector<Run> runs;
    for (const auto& t : traces) {
        Run r;
        r.rows = tnale::io::load_trace_csv(t);
        const fs::path dir = t.parent_path();
        r.label = dir.empty() ? t.stem().string() : dir.string();
        r.algorithm = "unknown";
        if (fs::exists(dir / "result.json")) {
            r.result = tnale::io::read_json(dir / "result.json");
            if (r.result->contains("algorithm")) r.algorithm = (*r.result)["algorithm"].get<std::string>();
        }
        runs.push_back(std::move(r));
    }

    const fs::path out(a.out);
    ensure_dir(out);
    {
        std::ofstream os(out / "curves.csv");
        os << "series,algorithm,eval_index,log_best_objective\n";
        for (const auto& r : runs) {
            double best = std::numeric_limits<double>::infinity();
            for (const auto& row : r.rows) {
                if (row.estimated) continue;
                best = std::min(best, row.objective);
                os << r.label << ',' << r.algorithm << ',' << row.eval_index << ','
                   << tnale::io::format_double(std::log(best)) << '\n';
            }
        }
    }

    struct Acc {
        std::vector<double> n_eval, eff;
        std::size_t successes = 0, with_truth = 0;
    };
    std::map<std::string, Acc> acc;
    for (const auto& r : runs) {
        Acc& x = acc[r.algorithm];
        std::size_t n = 0;
        for (const auto& row : r.rows)
            if (!row.estimated) n = std::max(n, row.eval_index);
        if (r.result && r.result->contains("n_eval")) n = (*r.result)["n_eval"].get<std::size_t>();
        x.n_eval.push_back(static_cast<double>(n));
        if (r.result && r.result->contains("eff")) {
            x.eff.push_back((*r.result)["eff"].get<double>());
            ++x.with_truth;
            if ((*r.result)["success"].get<bool>()) ++x.successes;
        }
    }
    auto mean_std = [](const std::vector<double>& v) {
        if (v.empty()) return std::pair<double, double>{NAN, NAN};
        double s = 0.0;
        for (double x : v) s += x;
        const double mean = s / static_cast<double>(v.size());
        double q = 0.0;
        for (double x : v) q += (x - mean) * (x - mean);
        return std::pair<double, double>{mean, std::sqrt(q / static_cast<double>(v.size()))};
    };
    Json summary = Json::array();
    {
        std::ofstream os(out / "summary.csv");
        os << "algorithm,runs,mean_n_eval,std_n_eval,success_rate,mean_eff,std_eff\n";
        for (const auto& [algo, x] : acc) {
            const auto [mn, sn] = mean_std(x.n_eval);
            const auto [me, se] = mean_std(x.eff);
            const double rate = x.with_truth ? static_cast<double>(x.successes) / static_cast<double>(x.with_truth) : NAN;
            os << algo << ',' << x.n_eval.size() << ',' << tnale::io::format_double(mn) << ','
               << tnale::io::format_double(sn) << ',' << tnale::io::format_double(rate) << ','
               << tnale::io::format_double(me) << ',' << tnale::io::format_double(se) << '\n';
            Json row{{"algorithm", algo}, {"runs", x.n_eval.size()}, {"mean_n_eval", mn}, {"std_n_eval", sn}};
            row["success_rate"] = std::isnan(rate) ? Json(nullptr) : Json(rate);
            row["mean_eff"] = std::isnan(me) ? Json(nullptr) : Json(me);
            row["std_eff"] = std::isnan(se) ? Json(nullptr) : Json(se);
            // Table-style cell: Eff mean +- std [mean #evaluations].
            std::ostringstream cell;
            cell << std::fixed << std::setprecision(2);
            if (!std::isnan(me)) cell << me << "+-" << se << ' ';
            cell << '[' << std::lround(mn) << ']';
            row["cell"] = cell.str();
            summary.push_back(row);
        }
    }
    tnale::io::write_json(out / "summary.json", summary);
    m.outputs = {(out / "curves.csv").string(), (out / "summary.csv").string(), (out / "summary.json").string(),
                 (out / "manifest.json").string()};
    m.write(out, app);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tensor-network structure search by alternating local enumeration"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    GenerateArgs gen;
    SearchArgs search;
    LandscapeArgs land;
    ReportArgs report;
    CLI::App* c_gen = app.add_subcommand("generate", "Synthetic target with a hidden structure");
    CLI::App* c_search = app.add_subcommand("search", "Structure search on a target tensor");
    CLI::App* c_land = app.add_subcommand("landscape", "Landscape tensor and its unfolding spectra");
    CLI::App* c_report = app.add_subcommand("report", "Merge traces into plot-ready CSV");
    add_generate(*c_gen, gen);
    add_search(*c_search, search);
    add_landscape(*c_land, land);
    add_report(*c_report, report);

    try {
        std::vector<std::string> args(argv + 1, argv + argc);
        args = expand_config(std::move(args));
        std::reverse(args.begin(), args.end());
        app.parse(args);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (c_gen->parsed()) return run_generate(gen, c_gen);
        if (c_search->parsed()) return run_search(search, c_search);
        if (c_land->parsed()) return run_landscape(land, c_land);
        return run_report(report, c_report);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const tnale::GridCapExceeded& e) {
        std::cerr << "refused: " << e.what() << " (raise TNALE_GRID_CAP to allow it)\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
