#include "dode/cli.hpp"

#include "dode/analysis.hpp"
#include "dode/error.hpp"
#include "dode/io.hpp"
#include "dode/synth.hpp"
#include "dode/util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>

namespace dode {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

void RunConfig::validate() const
{
    if (network.empty())
        throw InvalidArgument("config: 'network' path is required");
    if (days.empty())
        throw InvalidArgument("config: 'grid.days' must list at least one day");
    if (rebin_factor < 1)
        throw InvalidArgument("config: 'grid.rebin_factor' must be at least 1");
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw InvalidArgument("config: 'alpha' must lie in [0, 1]");
    if (!(lambda_km > 0.0))
        throw InvalidArgument("config: 'lambda_km' must be positive");
    if (!(weights.eta >= 0.0 && weights.beta >= 0.0 && weights.gamma >= 0.0))
        throw InvalidArgument("config: weights must be nonnegative");
    if (paths.max_paths < 1)
        throw InvalidArgument("config: 'paths.max_paths' must be at least 1");
    if (dar.samples_per_interval < 1)
        throw InvalidArgument("config: 'dar.samples_per_interval' must be at least 1");
    solver.validate();
}

namespace {

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p)
{
    if (p.empty())
        return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base / path;
}

DarMode parse_dar_mode(const std::string& s)
{
    if (s == "time_weighted")
        return DarMode::TimeWeighted;
    if (s == "any_overlap")
        return DarMode::AnyOverlap;
    if (s == "entry")
        return DarMode::Entry;
    throw ParseError("unknown DAR mode '" + s + "' (time_weighted, any_overlap, entry)");
}

const char* dar_mode_name(DarMode m)
{
    switch (m) {
    case DarMode::TimeWeighted: return "time_weighted";
    case DarMode::AnyOverlap: return "any_overlap";
    case DarMode::Entry: return "entry";
    }
    return "time_weighted";
}

RouteChoiceMode parse_route_choice(const std::string& s)
{
    if (s == "single")
        return RouteChoiceMode::Single;
    if (s == "uniform")
        return RouteChoiceMode::Uniform;
    throw ParseError("unknown route choice '" + s + "' (single, uniform)");
}

Weights parse_weight_triple(const std::string& text)
{
    // beta,eta,gamma in the column order of the sweep table
    std::vector<double> v;
    std::size_t start = 0;
    while (start <= text.size()) {
        auto pos = text.find(',', start);
        if (pos == std::string::npos)
            pos = text.size();
        v.push_back(parse_double(text.substr(start, pos - start), "weight"));
        start = pos + 1;
    }
    if (v.size() != 3)
        throw ParseError("weights must be given as beta,eta,gamma (got '" + text + "')");
    return {v[1], v[0], v[2]};
}

template <class T>
void get_if(const json& j, const char* key, T& out)
{
    if (j.contains(key) && !j[key].is_null())
        out = j[key].get<T>();
}

} // namespace

RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir, std::string_view source)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
    RunConfig c;
    try {
        std::string s;
        auto path_field = [&](const char* key, std::filesystem::path& out) {
            if (doc.contains(key) && doc[key].is_string())
                out = resolve(base_dir, doc[key].get<std::string>());
        };
        path_field("network", c.network);
        path_field("sensors", c.sensors);
        path_field("arterial", c.arterial);
        path_field("income", c.income);
        if (doc.contains("output_dir"))
            c.output_dir = resolve(base_dir, doc["output_dir"].get<std::string>());
        else
            c.output_dir = base_dir / "out";
        if (doc.contains("grid")) {
            const auto& g = doc["grid"];
            get_if(g, "interval_minutes", c.interval_minutes);
            get_if(g, "rebin_factor", c.rebin_factor);
            if (g.contains("days")) {
                for (const auto& d : g["days"])
                    c.days.push_back(parse_date(d.get<std::string>()));
            }
        }
        get_if(doc, "alpha", c.alpha);
        get_if(doc, "lambda_km", c.lambda_km);
        if (doc.contains("weights")) {
            get_if(doc["weights"], "eta", c.weights.eta);
            get_if(doc["weights"], "beta", c.weights.beta);
            get_if(doc["weights"], "gamma", c.weights.gamma);
        }
        if (doc.contains("paths")) {
            get_if(doc["paths"], "max_paths", c.paths.max_paths);
            get_if(doc["paths"], "seed", c.paths.seed);
            if (doc["paths"].contains("route_choice"))
                c.route_choice = parse_route_choice(doc["paths"]["route_choice"].get<std::string>());
        }
        if (doc.contains("dar")) {
            get_if(doc["dar"], "samples_per_interval", c.dar.samples_per_interval);
            get_if(doc["dar"], "threads", c.dar.threads);
            get_if(doc["dar"], "cache", c.dar_cache);
            if (doc["dar"].contains("mode"))
                c.dar.mode = parse_dar_mode(doc["dar"]["mode"].get<std::string>());
        }
        if (doc.contains("cleaning")) {
            get_if(doc["cleaning"], "speed_cap_kmh", c.cleaning.speed_cap_kmh);
            get_if(doc["cleaning"], "max_gap_intervals", c.cleaning.max_gap_intervals);
        }
        if (doc.contains("solver")) {
            const auto& j = doc["solver"];
            get_if(j, "max_epochs", c.solver.max_epochs);
            get_if(j, "batch_rows", c.solver.batch_rows);
            get_if(j, "initial_step", c.solver.initial_step);
            get_if(j, "step_decay", c.solver.step_decay);
            get_if(j, "tolerance", c.solver.tolerance);
            get_if(j, "seed", c.solver.seed);
            get_if(j, "accelerate", c.solver.accelerate);
            get_if(j, "precondition", c.solver.precondition);
            get_if(j, "init_value", c.solver.init_value);
            if (j.contains("init")) {
                const auto mode = j["init"].get<std::string>();
                if (mode == "zeros")
                    c.solver.init_mode = InitMode::Zeros;
                else if (mode == "constant")
                    c.solver.init_mode = InitMode::Constant;
                else
                    throw ParseError("unknown solver init '" + mode + "' (zeros, constant)");
            }
        }
        if (doc.contains("sweep")) {
            for (const auto& w : doc["sweep"]) {
                Weights x{0.0, 0.0, 0.0};
                get_if(w, "eta", x.eta);
                get_if(w, "beta", x.beta);
                get_if(w, "gamma", x.gamma);
                c.sweep.push_back(x);
            }
        }
    } catch (const json::exception& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    } catch (const ParseError& e) {
        throw ParseError(std::string(source) + ": " + e.what());
    }
    return c;
}

RunConfig load_config(const std::filesystem::path& path)
{
    const auto base = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
    return parse_config(read_text(path), base, path.string());
}

std::string config_to_json(const RunConfig& c, const std::filesystem::path& relative_to)
{
    auto rel = [&](const std::filesystem::path& p) { return p.empty() ? std::string() : p.lexically_relative(relative_to).generic_string(); };
    ordered_json doc;
    doc["network"] = rel(c.network);
    doc["sensors"] = rel(c.sensors);
    doc["arterial"] = rel(c.arterial);
    if (!c.income.empty())
        doc["income"] = rel(c.income);
    doc["output_dir"] = rel(c.output_dir);
    ordered_json grid;
    grid["interval_minutes"] = c.interval_minutes;
    grid["rebin_factor"] = c.rebin_factor;
    grid["days"] = ordered_json::array();
    for (const auto& d : c.days)
        grid["days"].push_back(format_date(d));
    doc["grid"] = grid;
    doc["alpha"] = c.alpha;
    doc["lambda_km"] = c.lambda_km;
    doc["weights"] = {{"eta", c.weights.eta}, {"beta", c.weights.beta}, {"gamma", c.weights.gamma}};
    doc["paths"] = {{"max_paths", c.paths.max_paths}, {"seed", c.paths.seed},
                    {"route_choice", c.route_choice == RouteChoiceMode::Single ? "single" : "uniform"}};
    doc["dar"] = {{"samples_per_interval", c.dar.samples_per_interval}, {"mode", dar_mode_name(c.dar.mode)},
                  {"cache", c.dar_cache}};
    doc["solver"] = {{"max_epochs", c.solver.max_epochs},   {"batch_rows", c.solver.batch_rows},
                     {"initial_step", c.solver.initial_step}, {"step_decay", c.solver.step_decay},
                     {"tolerance", c.solver.tolerance},     {"seed", c.solver.seed},
                     {"accelerate", c.solver.accelerate},   {"precondition", c.solver.precondition}};
    if (!c.sweep.empty()) {
        doc["sweep"] = ordered_json::array();
        for (const auto& w : c.sweep)
            doc["sweep"].push_back({{"beta", w.beta}, {"eta", w.eta}, {"gamma", w.gamma}});
    }
    return doc.dump(2) + "\n";
}

namespace {

ArterialSensor rebin_arterial(const ArterialSensor& a, std::size_t factor)
{
    ArterialSensor out{a.sensor_id, a.position, {}};
    out.flow.assign(a.flow.size() / factor, 0.0);
    for (std::size_t i = 0; i < out.flow.size() * factor; ++i)
        out.flow[i / factor] += a.flow[i];
    return out;
}

} // namespace

Prepared prepare(const RunConfig& config)
{
    config.validate();
    Prepared p;
    p.network = read_network(config.network);
    const TimeGrid native(config.interval_minutes, config.days);
    p.grid = config.rebin_factor > 1 ? native.coarsened(config.rebin_factor) : native;
    const auto factor = static_cast<std::size_t>(config.rebin_factor);

    if (config.sensors.empty())
        throw InvalidArgument("config: 'sensors' path is required");
    const auto read = parse_sensor_csv(read_text(config.sensors), native, config.sensors.string());
    p.records_outside_grid = read.outside_grid;
    SensorTable table;
    for (const auto& series : collect_series(read.records, native.interval_count())) {
        auto clean = clean_sensor(series, config.cleaning, &p.warnings);
        if (factor > 1)
            clean = rebin(clean, factor);
        table.emplace(clean.sensor_id, std::move(clean));
    }

    std::vector<ArterialSensor> arterials;
    if (!config.arterial.empty()) {
        arterials = parse_arterial_csv(read_text(config.arterial), native, config.arterial.string());
        if (factor > 1) {
            for (auto& a : arterials)
                a = rebin_arterial(a, factor);
        }
    }

    const auto intervals = p.grid.interval_count();
    const Table y = link_flows(p.network, table, intervals);
    SpeedProfile speeds{link_speeds(p.network, table, intervals), static_cast<double>(p.grid.interval_minutes())};
    p.od_pairs = enumerate_od_pairs(p.network, config.paths);
    p.route_choice = RouteChoice(p.od_pairs, config.route_choice);

    const auto key = dar_cache_key(p.network, p.od_pairs, speeds, config.dar);
    const auto cache_path = config.output_dir / "dar_cache.txt";
    bool loaded = false;
    if (config.dar_cache && std::filesystem::exists(cache_path)) {
        if (auto cached = parse_dar_text(read_text(cache_path), key, cache_path.string())) {
            p.dar = std::move(*cached);
            loaded = true;
        }
    }
    if (!loaded) {
        p.dar = compute_dar_tensor(p.network, p.od_pairs, speeds, config.dar);
        if (config.dar_cache)
            write_text(cache_path, dar_to_text(p.dar, key));
    }

    const Table lb = lower_bounds(p.network, arterials, intervals, config.lambda_km, config.alpha);
    ProblemInputs in{&p.network, p.od_pairs, &p.dar, &p.route_choice, &y, &lb, p.grid.intervals_per_day()};
    p.problem = assemble_problem(in, config.weights);
    return p;
}

namespace {

void report_warnings(const Prepared& p, std::ostream& err)
{
    for (const auto& w : p.warnings)
        err << "warning: sensor " << w.sensor_id << ' ' << w.field << " gap of " << w.length
            << " intervals from interval " << w.first << " (interpolated)\n";
    if (p.records_outside_grid)
        err << "warning: " << p.records_outside_grid << " sensor rows fall outside the time grid and were ignored\n";
}

void print_report(std::ostream& out, const std::string& stage, const ErrorReport& r)
{
    out << stage << ": epsilon_b=" << format_double(r.eps_b) << " epsilon_s=" << format_double(r.eps_s)
        << " epsilon_lb=" << format_double(r.eps_lb) << " epsilon_tau=" << format_double(r.eps_tau)
        << " total_flow=" << format_double(r.total_flow) << " epochs=" << r.epochs_run
        << (r.converged ? " converged" : " not-converged") << '\n';
}

struct Overrides {
    std::optional<std::string> output_dir;
    std::optional<double> alpha, lambda_km, eta, beta, gamma, tolerance;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_epochs, batch_rows, max_paths, samples;
    bool no_cache = false;

    void add(CLI::App& app)
    {
        app.add_option("--output-dir", output_dir, "Output directory (overrides the config)");
        app.add_option("--alpha", alpha, "Share of arterial flow used as the local-road lower bound");
        app.add_option("--lambda-km", lambda_km, "Arterial sensor radius around each node");
        app.add_option("--eta", eta, "Lower-bound weight");
        app.add_option("--beta", beta, "Symmetry weight");
        app.add_option("--gamma", gamma, "Total-flow weight");
        app.add_option("--seed", seed, "Solver seed");
        app.add_option("--max-epochs", max_epochs, "Solver epoch limit");
        app.add_option("--tolerance", tolerance, "Relative objective change for convergence");
        app.add_option("--batch-rows", batch_rows, "Rows per stochastic step (0 = full batch)");
        app.add_option("--max-paths", max_paths, "Shortest paths retained per OD pair");
        app.add_option("--samples", samples, "DAR departure samples per interval");
        app.add_flag("--no-dar-cache", no_cache, "Recompute assignment ratios without reading or writing the cache");
    }

    void apply(RunConfig& c) const
    {
        if (output_dir)
            c.output_dir = *output_dir;
        if (alpha)
            c.alpha = *alpha;
        if (lambda_km)
            c.lambda_km = *lambda_km;
        if (eta)
            c.weights.eta = *eta;
        if (beta)
            c.weights.beta = *beta;
        if (gamma)
            c.weights.gamma = *gamma;
        if (seed)
            c.solver.seed = *seed;
        if (max_epochs)
            c.solver.max_epochs = *max_epochs;
        if (tolerance)
            c.solver.tolerance = *tolerance;
        if (batch_rows)
            c.solver.batch_rows = *batch_rows;
        if (max_paths)
            c.paths.max_paths = *max_paths;
        if (samples)
            c.dar.samples_per_interval = *samples;
        if (no_cache)
            c.dar_cache = false;
    }
};

int cmd_estimate(const RunConfig& config, bool dump_problem, std::ostream& out, std::ostream& err)
{
    const auto p = prepare(config);
    report_warnings(p, err);
    if (dump_problem)
        write_text(config.output_dir / "problem.txt", problem_to_text(p.problem));
    const auto result = two_stage_estimate(p.problem, config.weights, config.solver);
    write_text(config.output_dir / "base_estimate.csv",
               estimate_to_csv(p.network, p.od_pairs, p.grid, result.base.x, "base", &result.base.report));
    write_text(config.output_dir / "extended_estimate.csv",
               estimate_to_csv(p.network, p.od_pairs, p.grid, result.extended.x, "extended", &result.extended.report));
    write_text(config.output_dir / "error_report.csv",
               error_report_csv({{"base", result.base.report}, {"extended", result.extended.report}}));
    print_report(out, "base", result.base.report);
    print_report(out, "extended", result.extended.report);
    out << "wrote " << (config.output_dir / "extended_estimate.csv").string() << '\n';
    return 0;
}

int cmd_sweep(const RunConfig& config, std::ostream& out, std::ostream& err)
{
    if (config.sweep.empty())
        throw InvalidArgument("sweep grid is empty (use --weights beta,eta,gamma or the config 'sweep' list)");
    const auto p = prepare(config);
    report_warnings(p, err);
    const auto rows = weight_sweep(p.problem, config.sweep, config.solver);
    const auto path = config.output_dir / "sweep.csv";
    write_text(path, sweep_csv(rows));
    out << sweep_csv(rows);
    out << "wrote " << path.string() << '\n';
    return 0;
}

struct SynthParams {
    std::string out_dir;
    std::string network_path;
    std::size_t grid_rows = 3, grid_cols = 3, region_rows = 1, region_cols = 2;
    double spacing_km = 2.0;
    std::size_t complete = 0;
    double radius_km = 2.0;
    std::string start_date = "2019-01-01";
    std::size_t day_count = 1;
    int interval_minutes = 60;
    ProfileParams profile;
    double noise_sigma = 0.0;
    std::uint64_t seed = 1;
    std::size_t max_paths = 1;
    std::string route_choice = "single";
    double alpha = 0.5;
};

int cmd_synth(const SynthParams& s, std::ostream& out)
{
    if (s.out_dir.empty())
        throw InvalidArgument("--out is required");
    const std::filesystem::path dir(s.out_dir);
    TrafficNetwork network = !s.network_path.empty() ? read_network(s.network_path)
        : s.complete > 0 ? make_complete_network(s.complete, s.radius_km)
                         : make_grid_network({s.grid_rows, s.grid_cols, s.spacing_km, s.region_rows, s.region_cols});
    if (s.day_count == 0)
        throw InvalidArgument("--days must be at least 1");
    std::vector<Date> days;
    const auto start = parse_date(s.start_date);
    for (std::size_t d = 0; d < s.day_count; ++d)
        days.push_back(add_days(start, static_cast<int>(d)));
    const TimeGrid grid(s.interval_minutes, days);
    const PathOptions paths{s.max_paths, s.seed};
    const auto mode = parse_route_choice(s.route_choice);

    const auto scenario = generate_scenario(network, grid, s.profile, s.seed, paths, mode);
    const RouteChoice rc(scenario.od_pairs, mode);
    const auto dar = compute_dar_tensor(scenario.network, scenario.od_pairs, scenario.speeds);
    const auto obs = forward_simulate(scenario, dar, rc, {s.noise_sigma, s.seed + 1});

    write_text(dir / "network.json", network_to_json(scenario.network));
    write_text(dir / "sensors.csv", sensor_records_to_csv(obs.records, grid));
    write_text(dir / "arterial.csv", arterials_to_csv(scenario.arterials, grid));
    write_text(dir / "ground_truth.csv",
               estimate_to_csv(scenario.network, scenario.od_pairs, grid, scenario.ground_truth_q, "ground_truth",
                               nullptr));

    RunConfig c;
    c.network = dir / "network.json";
    c.sensors = dir / "sensors.csv";
    c.arterial = dir / "arterial.csv";
    c.output_dir = dir / "out";
    c.interval_minutes = s.interval_minutes;
    c.days = days;
    c.alpha = s.alpha;
    c.paths = paths;
    c.route_choice = mode;
    c.solver.max_epochs = 5000;
    c.sweep = {{0.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 10.0, 0.0}, {1.0, 10.0, 1.0}};
    write_text(dir / "config.json", config_to_json(c, dir));

    double total = 0.0;
    for (double v : scenario.ground_truth_q)
        total += v;
    out << "scenario: " << scenario.network.node_count() << " nodes, " << scenario.network.link_count() << " links, "
        << scenario.od_pairs.size() << " OD pairs, " << grid.interval_count() << " intervals, total demand "
        << format_double(total) << " vehicles\n";
    out << "wrote " << (dir / "config.json").string() << '\n';
    return 0;
}

struct AnalyzeParams {
    std::string reference, comparison;
    std::size_t intervals = 8, span_days = 46;
    std::string start = "01-12";
    bool truncate_last = false;
    double min_daily_flow = 1000.0;
    double p_threshold = 0.05;
    std::string income;
    bool normalize_income = false;
    double kde_threshold = 0.0;
};

Date with_month_day(const Date& year_of, const std::string& month_day)
{
    return parse_date(std::to_string(static_cast<int>(year_of.year())) + "-" + month_day);
}

int cmd_analyze(const RunConfig& config, const AnalyzeParams& a, std::ostream& out)
{
    const auto network = read_network(config.network);
    const auto ref = parse_estimate_csv(read_text(a.reference), a.reference);
    const auto cmp = parse_estimate_csv(read_text(a.comparison), a.comparison);
    for (const auto* f : {&ref, &cmp}) {
        if (!f->network_digest.empty() && f->network_digest != network.digest())
            throw InvalidArgument("estimate network digest " + f->network_digest
                                  + " does not match the configured network " + network.digest());
    }
    if (ref.days.empty() || cmp.days.empty())
        throw InvalidArgument("estimates must cover at least one day");

    const auto flows_ref = estimate_region_flows(ref, network);
    const auto flows_cmp = estimate_region_flows(cmp, network);
    const auto scheme_ref = split_intervals(ref.days, with_month_day(ref.days.front(), a.start), a.intervals,
                                            a.span_days, a.truncate_last);
    const auto scheme_cmp = split_intervals(cmp.days, with_month_day(cmp.days.front(), a.start), a.intervals,
                                            a.span_days, a.truncate_last);
    const auto paired = pair_region_flows(flows_ref, ref.days, scheme_ref, flows_cmp, cmp.days, scheme_cmp);
    const auto result = classify_changes(paired, {a.min_daily_flow, a.p_threshold});

    std::optional<std::vector<IncomeExtrema>> extrema;
    std::filesystem::path income_path = a.income.empty() ? config.income : std::filesystem::path(a.income);
    if (!income_path.empty()) {
        const auto rows = parse_income_csv(read_text(income_path), income_path.string());
        extrema = od_income_extrema(result.records, network, district_income(rows, a.normalize_income));
    }

    std::vector<double> changes;
    for (const auto& r : result.records) {
        if (r.classification != ChangeClass::Excluded)
            changes.push_back(r.change);
    }
    const auto dir = config.output_dir;
    write_text(dir / "change_summary.csv", change_summary_csv(result.summary, scheme_ref));
    write_text(dir / "change_records.csv",
               change_records_csv(result.records, network, extrema ? &*extrema : nullptr));
    if (!changes.empty()) {
        KdeOptions ko;
        ko.threshold = a.kde_threshold;
        write_text(dir / "change_kde.csv", kde_csv(kde(changes, {}, ko)));
    }
    out << change_summary_csv(result.summary, scheme_ref);
    out << "wrote " << (dir / "change_summary.csv").string() << '\n';
    return 0;
}

int cmd_validate_network(const std::string& path, std::ostream& out)
{
    const auto network = read_network(path);
    const auto pairs = network.node_count() * (network.node_count() - 1);
    out << "nodes " << network.node_count() << "\nlinks " << network.link_count() << "\nregions "
        << network.regions().size() << "\nod_pairs " << pairs << "\ndigest " << network.digest() << '\n';
    return 0;
}

} // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err)
{
    CLI::App app{"Dynamic origin-destination demand estimation from highway and arterial sensors"};
    app.require_subcommand(1);

    std::string config_path;
    bool dump_problem = false;
    Overrides overrides;
    auto* estimate = app.add_subcommand("estimate", "Two-stage estimate from sensor files");
    estimate->add_option("--config", config_path, "Run configuration (JSON)")->required();
    estimate->add_flag("--dump-problem", dump_problem, "Also write the assembled system to problem.txt");
    overrides.add(*estimate);

    std::vector<std::string> weight_grid;
    Overrides sweep_overrides;
    auto* sweep = app.add_subcommand("sweep", "Error table over a grid of regularizer weights");
    sweep->add_option("--config", config_path, "Run configuration (JSON)")->required();
    sweep->add_option("--weights", weight_grid, "Grid entry beta,eta,gamma (repeatable; replaces the config grid)");
    sweep_overrides.add(*sweep);

    SynthParams sp;
    auto* synth = app.add_subcommand("synth", "Write a synthetic scenario bundle");
    synth->add_option("--out", sp.out_dir, "Bundle directory")->required();
    synth->add_option("--network", sp.network_path, "Use this network file instead of a generated one");
    synth->add_option("--grid-rows", sp.grid_rows, "Lattice rows");
    synth->add_option("--grid-cols", sp.grid_cols, "Lattice columns");
    synth->add_option("--spacing-km", sp.spacing_km, "Lattice spacing");
    synth->add_option("--region-rows", sp.region_rows, "Region tiling rows");
    synth->add_option("--region-cols", sp.region_cols, "Region tiling columns");
    synth->add_option("--complete", sp.complete, "Complete digraph on N nodes instead of a lattice");
    synth->add_option("--radius-km", sp.radius_km, "Circle radius for --complete");
    synth->add_option("--start-date", sp.start_date, "First day (YYYY-MM-DD)");
    synth->add_option("--days", sp.day_count, "Number of consecutive days");
    synth->add_option("--interval-minutes", sp.interval_minutes, "Grid interval (must divide 1440)");
    synth->add_option("--base-level", sp.profile.base_level, "Off-peak vehicles per interval per OD");
    synth->add_option("--morning-height", sp.profile.morning_height, "Morning peak height");
    synth->add_option("--evening-height", sp.profile.evening_height, "Evening peak height");
    synth->add_option("--peak-width-minutes", sp.profile.width_minutes, "Peak standard deviation");
    synth->add_option("--base-speed-kmh", sp.profile.base_speed_kmh, "Free-flow speed");
    synth->add_option("--peak-speed-drop", sp.profile.peak_speed_drop, "Fractional speed loss at peaks");
    synth->add_flag("--symmetric", sp.profile.symmetric, "Make daily OD totals symmetric");
    synth->add_option("--noise-sigma", sp.noise_sigma, "Lognormal sigma on sensor flows");
    synth->add_option("--seed", sp.seed, "Generation seed");
    synth->add_option("--max-paths", sp.max_paths, "Shortest paths retained per OD pair");
    synth->add_option("--route-choice", sp.route_choice, "single or uniform");
    synth->add_option("--alpha", sp.alpha, "Alpha written to the bundle's config");

    AnalyzeParams ap;
    auto* analyze = app.add_subcommand("analyze", "Year-over-year comparison of two estimates");
    analyze->add_option("--config", config_path, "Run configuration (JSON)")->required();
    analyze->add_option("--reference", ap.reference, "Reference-year estimate (e.g. 2019)")->required();
    analyze->add_option("--comparison", ap.comparison, "Comparison-year estimate (e.g. 2020)")->required();
    analyze->add_option("--intervals", ap.intervals, "Number of intervals per year");
    analyze->add_option("--span-days", ap.span_days, "Days per interval");
    analyze->add_option("--start", ap.start, "First interval start as MM-DD");
    analyze->add_flag("--truncate-last", ap.truncate_last, "Clip the last interval at the last available day");
    analyze->add_option("--min-daily-flow", ap.min_daily_flow, "Exclude pairs below this reference mean");
    analyze->add_option("--p-threshold", ap.p_threshold, "Significance level");
    analyze->add_option("--income", ap.income, "Income file (zipcode,income,population,district,overlap_fraction)");
    analyze->add_flag("--normalize-income-weights", ap.normalize_income, "Rescale district weights to sum to one");
    analyze->add_option("--kde-threshold", ap.kde_threshold, "Split point for the KDE area statistic");
    std::string analyze_output;
    analyze->add_option("--output-dir", analyze_output, "Output directory (overrides the config)");

    std::string network_path;
    auto* validate = app.add_subcommand("validate-network", "Check a network file and print its summary");
    validate->add_option("network", network_path, "Network file (JSON)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            out << app.help();
            for (auto* sub : app.get_subcommands())
                out << sub->help();
            return 0;
        }
        err << "error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (*estimate) {
            auto config = load_config(config_path);
            overrides.apply(config);
            return cmd_estimate(config, dump_problem, out, err);
        }
        if (*sweep) {
            auto config = load_config(config_path);
            sweep_overrides.apply(config);
            if (!weight_grid.empty()) {
                config.sweep.clear();
                for (const auto& w : weight_grid)
                    config.sweep.push_back(parse_weight_triple(w));
            }
            return cmd_sweep(config, out, err);
        }
        if (*synth)
            return cmd_synth(sp, out);
        if (*analyze) {
            auto config = load_config(config_path);
            if (!analyze_output.empty())
                config.output_dir = analyze_output;
            return cmd_analyze(config, ap, out);
        }
        if (*validate)
            return cmd_validate_network(network_path, out);
    } catch (const DisconnectedGraph& e) {
        err << "error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}

} // namespace dode
