// spreadgrad: waiting-time surface fitting, spread gradients, jump detection,
// spread regression and stratified-diffusion simulation from the command line.
#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spreadgrad/curve_gradient.hpp"
#include "spreadgrad/dataset.hpp"
#include "spreadgrad/errors.hpp"
#include "spreadgrad/gp_fit.hpp"
#include "spreadgrad/gradient_field.hpp"
#include "spreadgrad/rayleigh.hpp"
#include "spreadgrad/spread_regression.hpp"
#include "spreadgrad/strat_sim.hpp"
#include "spreadgrad/svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spreadgrad;

namespace {

// Every setting is a named option with a typed default. The resolved value is
// the command-line flag if given, else the config file entry, else the default.
struct Setting {
    std::string name;
    json def;
    std::string help;
    std::string text;
    CLI::Option* opt = nullptr;
};

class Command {
public:
    Command(CLI::App& app, std::string name, std::string description)
        : name_(std::move(name)), sub_(app.add_subcommand(name_, std::move(description))) {
        add("input", "", "input CSV");
        add("output-dir", ".", "directory for outputs");
        add("seed", nullptr, "random seed (required)");
        add("threads", 1, "worker threads");
        sub_->add_option("--config", config_path_, "JSON file of settings keyed by flag name");
        sub_->add_flag("--print-config", print_config_, "print the resolved settings as JSON and exit");
    }

    void add(const std::string& name, json def, const std::string& help) {
        settings_.push_back({name, std::move(def), help, "", nullptr});
    }

    // Registers options with CLI11; called once all settings are declared.
    void finalize() {
        for (auto& s : settings_) {
            std::string h = s.help;
            const bool shown = !s.def.is_null() && !(s.def.is_string() && s.def.get<std::string>().empty());
            if (shown) h += " [default: " + (s.def.is_string() ? s.def.get<std::string>() : s.def.dump()) + "]";
            s.opt = sub_->add_option("--" + s.name, s.text, h);
        }
    }

    CLI::App* app() const { return sub_; }
    const std::string& name() const { return name_; }
    bool print_config() const { return print_config_; }

    json resolve() const {
        json out = json::object();
        for (const auto& s : settings_) out[s.name] = s.def;
        if (!config_path_.empty()) {
            std::ifstream in(config_path_);
            if (!in) throw InputError("config: cannot open " + config_path_);
            json file;
            try {
                file = json::parse(in);
            } catch (const json::parse_error& e) {
                throw InputError("config: " + config_path_ + ": " + e.what());
            }
            if (!file.is_object()) throw InputError("config: " + config_path_ + " must hold a JSON object");
            for (auto it = file.begin(); it != file.end(); ++it) {
                const Setting* s = find(it.key());
                if (!s) throw InputError("config: unknown setting '" + it.key() + "' for " + name_);
                out[it.key()] = coerce(*s, it.value());
            }
        }
        for (const auto& s : settings_)
            if (s.opt->count() > 0) out[s.name] = parse_text(s, s.text);
        if (out["seed"].is_null()) throw InputError(name_ + ": --seed is required");
        return out;
    }

private:
    const Setting* find(const std::string& key) const {
        for (const auto& s : settings_)
            if (s.name == key) return &s;
        return nullptr;
    }

    static json coerce(const Setting& s, const json& v) {
        if (v.is_string() && !s.def.is_string() && !s.def.is_null()) return parse_text(s, v.get<std::string>());
        if (s.def.is_null()) {
            if (!v.is_number_integer()) throw InputError("setting '" + s.name + "' must be an integer");
            return v;
        }
        const bool ok = (s.def.is_boolean() && v.is_boolean()) || (s.def.is_string() && v.is_string()) ||
                        (s.def.is_number_integer() && v.is_number_integer()) ||
                        (s.def.is_number_float() && v.is_number());
        if (!ok) throw InputError("setting '" + s.name + "' has the wrong type");
        return s.def.is_number_float() ? json(v.get<double>()) : v;
    }

    static json parse_text(const Setting& s, const std::string& t) {
        try {
            std::size_t used = 0;
            if (s.def.is_string()) return t;
            if (s.def.is_boolean()) {
                if (t == "true" || t == "1") return true;
                if (t == "false" || t == "0") return false;
                throw std::invalid_argument(t);
            }
            if (s.def.is_number_float()) {
                const double v = std::stod(t, &used);
                if (used != t.size()) throw std::invalid_argument(t);
                return v;
            }
            const long long v = std::stoll(t, &used);
            if (used != t.size()) throw std::invalid_argument(t);
            return v;
        } catch (const std::logic_error&) {
            throw InputError("setting '" + s.name + "': cannot parse '" + t + "'");
        }
    }

    std::string name_;
    CLI::App* sub_;
    std::vector<Setting> settings_;
    std::string config_path_;
    bool print_config_ = false;
};

double num(const json& c, const char* k) { return c.at(k).get<double>(); }
long long integer(const json& c, const char* k) { return c.at(k).get<long long>(); }
std::string str(const json& c, const char* k) { return c.at(k).get<std::string>(); }

void require(bool ok, const std::string& msg) {
    if (!ok) throw InputError(msg);
}

unsigned threads_of(const json& c) {
    const long long t = integer(c, "threads");
    require(t >= 1 && t <= 256, "threads must lie in [1, 256]");
    return static_cast<unsigned>(t);
}

fs::path output_dir(const json& c) {
    fs::path d = str(c, "output-dir");
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec) throw InputError("cannot create output directory " + d.string());
    return d;
}

fs::path path_or(const json& c, const char* key, const fs::path& fallback) {
    const std::string v = str(c, key);
    return v.empty() ? fallback : fs::path(v);
}

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, sep))
        if (!item.empty()) out.push_back(item);
    return out;
}

void write_config(const fs::path& dir, const std::string& cmd, const json& c) {
    write_text(dir / (cmd + "_config.json"), c.dump(2) + "\n");
}

ColumnSchema schema_of(const json& c) {
    ColumnSchema s;
    s.id = str(c, "id-column");
    s.x = str(c, "x-column");
    s.y = str(c, "y-column");
    s.year = str(c, "year-column");
    s.geographic = c.at("geographic").get<bool>();
    s.jitter_seed = static_cast<std::uint64_t>(integer(c, "seed"));
    return s;
}

WaitingTimeDataset load_input(const json& c) {
    const std::string in = str(c, "input");
    require(!in.empty(), "--input is required");
    LoadResult r = load_dataset(in, schema_of(c));
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << "\n";
    return std::move(r.data);
}

ChainConfig chain_of(const json& c) {
    ChainConfig ch;
    ch.iterations = static_cast<int>(integer(c, "iterations"));
    ch.burn_in = static_cast<int>(integer(c, "burn-in"));
    ch.thin = static_cast<int>(integer(c, "thin"));
    ch.n_chains = static_cast<int>(integer(c, "chains"));
    require(ch.iterations > 0 && ch.burn_in >= 0 && ch.burn_in < ch.iterations,
            "need 0 <= burn-in < iterations");
    require(ch.thin >= 1, "thin must be >= 1");
    require(ch.n_chains >= 1 && ch.n_chains <= 64, "chains must lie in [1, 64]");
    require(ch.iterations - ch.burn_in >= 100 * ch.thin / ch.n_chains,
            "too few retained draws; lower thin or raise iterations");
    ch.progress_interval = static_cast<int>(integer(c, "progress-interval"));
    ch.progress = [](const ChainProgress& p) {
        std::cerr << "chain " << p.chain << " iteration " << p.iteration << " acceptance " << p.acceptance << "\n";
    };
    return ch;
}

void add_dataset_settings(Command& cmd) {
    cmd.add("id-column", "id", "identifier column");
    cmd.add("x-column", "x", "easting (km) or longitude column");
    cmd.add("y-column", "y", "northing (km) or latitude column");
    cmd.add("year-column", "year", "year of first appearance column");
    cmd.add("geographic", false, "coordinates are lon/lat degrees; project with Albers equal-area");
}

void add_chain_settings(Command& cmd) {
    cmd.add("iterations", 25000, "MCMC iterations per chain");
    cmd.add("burn-in", 5000, "burn-in iterations");
    cmd.add("thin", 10, "keep every thin-th draw");
    cmd.add("chains", 1, "independent chains");
    cmd.add("progress-interval", 1000, "iterations between progress lines on stderr (0 disables)");
}

// ---- fit --------------------------------------------------------------------

void run_fit(const json& c) {
    const WaitingTimeDataset data = load_input(c);
    PriorSpec spec;
    if (num(c, "sigma2-scale") > 0) spec.sigma2_scale = num(c, "sigma2-scale");
    if (num(c, "tau2-scale") > 0) spec.tau2_scale = num(c, "tau2-scale");
    if (num(c, "phi-lo") > 0) spec.phi_lo = num(c, "phi-lo");
    if (num(c, "phi-hi") > 0) spec.phi_hi = num(c, "phi-hi");
    const auto dir = output_dir(c);
    std::cerr << "fit: " << data.size() << " observations\n";
    const PosteriorDraws post = fit_mcmc(data, chain_of(c), spec, static_cast<std::uint64_t>(integer(c, "seed")));
    save_draws(dir / "draws.csv", post);

    std::ostringstream rep;
    rep << "observations " << data.size() << "\n"
        << "retained draws " << post.draws.size() << "\n"
        << "prior sigma2 IG(" << csv::format(post.priors.sigma2.shape) << ", " << csv::format(post.priors.sigma2.scale)
        << ")\n"
        << "prior tau2 IG(" << csv::format(post.priors.tau2.shape) << ", " << csv::format(post.priors.tau2.scale)
        << ")\n"
        << "prior phi U(" << csv::format(post.priors.phi.lo) << ", " << csv::format(post.priors.phi.hi) << ")\n";
    for (std::size_t k = 0; k < post.diagnostics.acceptance_rate.size(); ++k)
        rep << "acceptance chain " << k << " " << csv::format(post.diagnostics.acceptance_rate[k]) << "\n";
    for (std::size_t k = 0; k < post.diagnostics.ess.size() && k < post.diagnostics.parameter_names.size(); ++k)
        rep << "ess " << post.diagnostics.parameter_names[k] << " " << csv::format(post.diagnostics.ess[k]) << "\n";
    for (const auto& w : post.diagnostics.warnings) rep << "warning " << w << "\n";
    write_text(dir / "diagnostics.txt", rep.str());
    write_config(dir, "fit", c);
}

// ---- spread -----------------------------------------------------------------

void run_spread(const json& c) {
    const WaitingTimeDataset data = load_input(c);
    const auto dir = output_dir(c);
    const PosteriorDraws all = load_draws(path_or(c, "draws", dir / "draws.csv"));
    const auto max_draws = integer(c, "max-draws");
    require(max_draws >= 0, "max-draws must be >= 0");
    const PosteriorDraws draws = subsample_draws(all, static_cast<std::size_t>(max_draws));
    const double level = num(c, "level");
    require(level > 0.0 && level < 1.0, "level must lie in (0, 1)");
    std::cerr << "spread: " << data.size() << " locations, " << draws.draws.size() << " draws\n";
    const auto field = spread_field(data, draws, data.locations(), static_cast<std::uint64_t>(integer(c, "seed")),
                                    level, threads_of(c));
    std::vector<SpreadRow> rows;
    for (std::size_t i = 0; i < field.size(); ++i) rows.push_back({data[i].id, field[i]});
    write_spread_csv(dir / "spread.csv", rows);
    write_text(dir / "spread.svg", quiver_svg(field, {900.0, 40.0, "Significant spread (arrow length ~ speed)"}));
    write_config(dir, "spread", c);
}

// ---- jumps ------------------------------------------------------------------

void run_jumps(const json& c) {
    const WaitingTimeDataset data = load_input(c);
    const auto dir = output_dir(c);
    const PosteriorDraws draws = load_draws(path_or(c, "draws", dir / "draws.csv"));
    const auto rows = read_spread_csv(path_or(c, "spread", dir / "spread.csv"));
    std::vector<SpreadSummary> field;
    for (const auto& r : rows) field.push_back(r.summary);

    BoxScanConfig box;
    box.grid_spacing_km = num(c, "grid-spacing");
    box.box_side_km = num(c, "box-side");
    box.nodes = static_cast<std::size_t>(integer(c, "nodes"));
    box.level = num(c, "level");
    require(integer(c, "max-draws") >= 0, "max-draws must be >= 0");
    box.max_draws = static_cast<std::size_t>(integer(c, "max-draws"));
    box.threads = threads_of(c);
    require(box.grid_spacing_km > 0 && box.box_side_km > 0, "grid-spacing and box-side must be positive");
    require(box.level > 0 && box.level < 1, "level must lie in (0, 1)");

    RayleighScanConfig ray;
    ray.radius_km = num(c, "radius");
    ray.alpha = num(c, "alpha");
    require(integer(c, "min-neighbors") >= 2, "min-neighbors must be >= 2");
    ray.min_neighbors = static_cast<std::size_t>(integer(c, "min-neighbors"));
    if (num(c, "speed-floor") >= 0) ray.speed_floor = num(c, "speed-floor");
    require(ray.radius_km > 0, "radius must be positive");
    require(ray.alpha > 0 && ray.alpha < 1, "alpha must lie in (0, 1)");

    const auto centers = hull_grid(data.locations(), box.grid_spacing_km);
    std::cerr << "jumps: " << centers.size() << " grid cells\n";
    const auto boxes = box_jump_scan(data, draws, centers, box, static_cast<std::uint64_t>(integer(c, "seed")));
    const auto rayl = field.empty() ? std::vector<RayleighResult>{} : rayleigh_scan_at(centers, field, ray);

    std::ofstream out(dir / "jumps.csv");
    if (!out) throw InputError("cannot write jumps.csv");
    csv::write_row(out, {"center_x", "center_y", "rayleigh_R", "rayleigh_p", "n_neighbors", "side_N", "side_E",
                         "side_S", "side_W", "flagged_rayleigh", "flagged_box"});
    for (std::size_t i = 0; i < centers.size(); ++i) {
        const auto& b = boxes[i];
        const bool tested = !rayl.empty() && rayl[i].tested;
        csv::write_row(out, {csv::format(b.center.x), csv::format(b.center.y),
                             tested ? csv::format(rayl[i].R) : "", tested ? csv::format(rayl[i].p_value) : "",
                             std::to_string(rayl.empty() ? 0 : rayl[i].n_neighbors), to_string(b.sides[0]),
                             to_string(b.sides[1]), to_string(b.sides[2]), to_string(b.sides[3]),
                             !rayl.empty() && rayl[i].flagged ? "1" : "0", b.flagged ? "1" : "0"});
    }
    write_text(dir / "jumps.svg", jumps_svg(data.locations(), rayl, boxes, {900.0, 40.0, "Candidate long-range jumps"}));
    write_config(dir, "jumps", c);
}

// ---- regress ----------------------------------------------------------------

void run_regress(const json& c) {
    const WaitingTimeDataset data = load_input(c);
    const auto dir = output_dir(c);
    const auto rows = read_spread_csv(path_or(c, "spread", dir / "spread.csv"));
    const auto covariates = split(str(c, "covariates"), ',');
    require(!covariates.empty(), "--covariates must name at least one covariate");
    std::vector<std::pair<std::string, std::string>> inter;
    for (const auto& t : split(str(c, "interactions"), ',')) {
        const auto ab = split(t, ':');
        require(ab.size() == 2, "interaction '" + t + "' must look like a:b");
        inter.emplace_back(ab[0], ab[1]);
    }
    const std::string resp = str(c, "response");
    require(resp == "median" || resp == "mean", "response must be median or mean");
    const RegressionDesign design =
        build_design(rows, data, covariates, inter, resp == "median" ? SpeedResponse::Median : SpeedResponse::Mean);
    std::cerr << "regress: " << design.X.rows() << " rows, " << design.excluded_insignificant
              << " insignificant locations excluded, " << design.excluded_missing << " with missing covariates\n";
    RegressionConfig rc;
    rc.chain = chain_of(c);
    rc.level = num(c, "level");
    require(rc.level > 0 && rc.level < 1, "level must lie in (0, 1)");
    const auto post = fit_spatial_regression(design, rc, static_cast<std::uint64_t>(integer(c, "seed")));
    write_coefficients_csv(dir / "coefficients.csv", post.summary);
    write_config(dir, "regress", c);
}

// ---- simulate ---------------------------------------------------------------

void run_simulate(const json& c) {
    const AlbersProjection proj;
    SimConfig cfg;
    cfg.origin = proj.project(num(c, "origin-lon"), num(c, "origin-lat"));
    cfg.start_year = num(c, "start-year");
    const double w = num(c, "speed-west"), e = num(c, "speed-east");
    if (!(w > 0) || !(e > 0)) throw InputError("invalid simulation config: speed-west and speed-east must be > 0");
    cfg.speed = w == e ? SpeedMap::uniform(w) : SpeedMap::meridian_split(num(c, "split-lon"), w, e);
    cfg.colony_rate_coeff = num(c, "coeff");
    cfg.jump_distance_km = num(c, "jump-distance");
    cfg.horizon_years = num(c, "horizon");
    cfg.timestep_years = num(c, "timestep");
    cfg.keep_covered_offspring = c.at("keep-covered").get<bool>();
    cfg.seed = static_cast<std::uint64_t>(integer(c, "seed"));
    for (const auto& j : split(str(c, "jumps"), ';')) {
        const auto f = split(j, ',');
        require(f.size() == 3, "invalid simulation config: jump '" + j + "' must be lon,lat,year");
        try {
            cfg.seeded_jumps.push_back({proj.project(std::stod(f[0]), std::stod(f[1])), std::stod(f[2])});
        } catch (const std::logic_error&) {
            throw InputError("invalid simulation config: jump '" + j + "' is not numeric");
        }
    }
    cfg.validate();

    std::vector<Location> query;
    const std::string points = str(c, "input");
    if (points.empty()) {
        const auto target = integer(c, "grid-target");
        require(target >= 1, "grid-target must be >= 1");
        query = study_area_grid(static_cast<std::size_t>(target));
    } else {
        const csv::Table t = csv::read(points);
        const auto cx = t.require_column("x"), cy = t.require_column("y");
        for (std::size_t r = 0; r < t.rows.size(); ++r)
            query.push_back({csv::to_double(t.rows[r][cx], r + 1, "x", t.source),
                             csv::to_double(t.rows[r][cy], r + 1, "y", t.source)});
    }
    const auto dir = output_dir(c);
    std::cerr << "simulate: " << query.size() << " query points\n";
    const SimResult res = simulate(cfg, query);
    std::cerr << "simulate: " << res.births.size() << " colonies founded\n";
    save_dataset(dir / "waiting_times.csv", to_dataset(res, query));
    write_event_log(dir / "events.jsonl", res);
    write_config(dir, "simulate", c);
}

int code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e)) return 3;
    return 2;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spread-rate inference from waiting-time data"};
    app.require_subcommand(1);

    Command fit(app, "fit", "fit the waiting-time Gaussian process by MCMC");
    add_dataset_settings(fit);
    add_chain_settings(fit);
    fit.add("sigma2-scale", 0.0, "inverse-gamma scale for sigma2 (0: from variogram)");
    fit.add("tau2-scale", 0.0, "inverse-gamma scale for tau2 (0: from variogram)");
    fit.add("phi-lo", 0.0, "lower decay bound (0: 3 / max distance)");
    fit.add("phi-hi", 0.0, "upper decay bound (0: 3 / min distance)");

    Command spread(app, "spread", "posterior spread speeds and directions at the data sites");
    add_dataset_settings(spread);
    spread.add("draws", "", "posterior draws CSV [default: <output-dir>/draws.csv]");
    spread.add("max-draws", 0, "use at most this many draws (0: all)");
    spread.add("level", 0.95, "credible level");

    Command jumps(app, "jumps", "Rayleigh and box-gradient scans for long-range jumps");
    add_dataset_settings(jumps);
    jumps.add("draws", "", "posterior draws CSV [default: <output-dir>/draws.csv]");
    jumps.add("spread", "", "spread CSV [default: <output-dir>/spread.csv]");
    jumps.add("grid-spacing", 50.0, "grid spacing in km");
    jumps.add("box-side", 100.0, "box side in km");
    jumps.add("nodes", 16, "Gauss-Legendre nodes per side");
    jumps.add("max-draws", 200, "draws used for box tests (0: all)");
    jumps.add("level", 0.95, "credible level for side classification");
    jumps.add("radius", 100.0, "Rayleigh neighbourhood radius in km");
    jumps.add("alpha", 0.05, "Rayleigh test level");
    jumps.add("min-neighbors", 5, "minimum significant neighbours for a Rayleigh test");
    jumps.add("speed-floor", -1.0, "neighbour mean speed floor (negative: 25th percentile)");

    Command regress(app, "regress", "spatial regression of log speed on covariates");
    add_dataset_settings(regress);
    add_chain_settings(regress);
    regress.add("spread", "", "spread CSV [default: <output-dir>/spread.csv]");
    regress.add("covariates", "", "comma-separated covariate names");
    regress.add("interactions", "", "comma-separated a:b pairs");
    regress.add("response", "median", "median or mean speed");
    regress.add("level", 0.95, "HPD level");

    Command sim(app, "simulate", "stratified-diffusion simulation onto a synthetic centroid grid");
    sim.add("origin-lon", kReferenceOrigin.lon, "introduction longitude");
    sim.add("origin-lat", kReferenceOrigin.lat, "introduction latitude");
    sim.add("start-year", 1900.0, "introduction year");
    sim.add("split-lon", kReferenceSplitLon, "meridian separating the two speed regions");
    sim.add("speed-west", 20.0, "colony expansion speed west of the meridian (km/yr)");
    sim.add("speed-east", 10.0, "colony expansion speed east of the meridian (km/yr)");
    sim.add("coeff", 0.1, "colony founding rate per km of radius per year");
    sim.add("jump-distance", 10.0, "distance of new colonies beyond the parent front (km)");
    sim.add("horizon", 107.0, "years simulated");
    sim.add("timestep", 1.0, "step length in years");
    sim.add("jumps", "-84.55,42.73,1950", "seeded colonies as lon,lat,year;...");
    sim.add("keep-covered", true, "found offspring that land on invaded ground");
    sim.add("grid-target", 400, "approximate number of grid points when no --input is given");

    std::vector<Command*> cmds{&fit, &spread, &jumps, &regress, &sim};
    for (auto* c : cmds) c->finalize();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    for (auto* c : cmds) {
        if (!c->app()->parsed()) continue;
        const std::string stage = c->name();
        try {
            const json cfg = c->resolve();
            if (c->print_config()) {
                std::cout << cfg.dump(2) << "\n";
                return 0;
            }
            if (stage == "fit") run_fit(cfg);
            else if (stage == "spread") run_spread(cfg);
            else if (stage == "jumps") run_jumps(cfg);
            else if (stage == "regress") run_regress(cfg);
            else run_simulate(cfg);
            return 0;
        } catch (const std::exception& e) {
            std::cerr << stage << ": error: " << e.what() << "\n";
            return code_for(e);
        }
    }
    return 2;
}
