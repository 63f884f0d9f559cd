#include "kgdd/cli.hpp"

#include <chrono>
#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"

#include "kgdd/config.hpp"
#include "kgdd/formats.hpp"
#include "kgdd/server.hpp"
#include "kgdd/synthetic.hpp"

namespace kgdd {

namespace {

namespace fs = std::filesystem;

std::ifstream open_in(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read " + path.string());
    return in;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    return out;
}

void close_out(std::ofstream& out, const fs::path& path) {
    out.close();
    if (!out) throw Error("cannot write " + path.string());
}

RunConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig c;
        c.match = name_geo_config();
        return c;
    }
    return load_run_config(path);
}

// Format from the extension: .nt, .ttl, anything else is CSV.
Dataset load_dataset(const fs::path& path, const SchemaMapping& mapping, std::ostream& err) {
    auto in = open_in(path);
    IngestOptions options;
    options.dataset_id = path.stem().string();
    options.source = path.stem().string();
    IngestDiagnostics diag;
    const std::string ext = path.extension().string();
    Dataset ds = ext == ".nt"    ? parse_rdf(in, RdfSyntax::ntriples, mapping, options, &diag)
                 : ext == ".ttl" ? parse_rdf(in, RdfSyntax::turtle, mapping, options, &diag)
                                 : parse_csv(in, mapping, options, &diag);
    for (const auto& issue : diag.rejected) {
        err << path.string() << ":" << issue.line << ": skipped: " << issue.message << "\n";
    }
    for (const auto& w : diag.warnings) err << path.string() << ": " << w << "\n";
    if (diag.unmapped_total() > 0) {
        err << path.string() << ": " << diag.unmapped_total() << " values under unmapped predicates\n";
    }
    if (ds.entities.empty()) throw ValidationError(path.string() + " holds no entities");
    return ds;
}

std::vector<SameAsAssertion> load_results(const fs::path& path) {
    auto in = open_in(path);
    return read_results(in);
}

GoldStandard load_gold(const fs::path& path) {
    auto in = open_in(path);
    return read_gold(in);
}

void write_dataset(const Dataset& ds, const fs::path& path) {
    auto out = open_out(path);
    if (path.extension() == ".nt") {
        write_ntriples(ds, out);
    } else {
        write_csv(ds, out);
    }
    close_out(out, path);
}

std::vector<double> parse_thresholds(const std::string& list) {
    std::vector<double> out;
    std::istringstream in(list);
    for (std::string item; std::getline(in, item, ',');) {
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::logic_error&) {
            throw ConfigError("bad threshold '" + item + "'");
        }
    }
    if (out.empty()) throw ConfigError("no thresholds given");
    return out;
}

std::string random_token() {
    std::random_device rd;
    std::ostringstream s;
    for (int i = 0; i < 4; ++i) s << std::hex << std::setw(8) << std::setfill('0') << rd();
    return s.str();
}

void print_entity(const Entity* e, const EntityId& id, std::ostream& out) {
    out << "  " << id.str();
    if (!e) {
        out << "\n";
        return;
    }
    out << " (" << e->type << ")\n";
    for (const auto& [name, values] : e->properties) {
        out << "    " << name << ":";
        for (const auto& v : values) out << " " << v.raw();
        out << "\n";
    }
}

struct Options {
    std::string config, data, data2, out, gold, results, decisions, report, trace, format;
    std::string thresholds, labeler = "cli", host = "127.0.0.1", token, data_dir = "kgdd-data";
    double threshold = -1.0, floor = -1.0;
    bool closed_world = false;
    std::size_t entities = 495, duplicates = 23, limit = 20;
    std::uint64_t seed = 2020;
    int port = 8080;
    std::string raw;
};

}  // namespace

int run_cli(int argc, const char* const* argv, std::istream& in, std::ostream& out, std::ostream& err) {
    CLI::App app{"Duplicate detection and fusion for knowledge graphs", "kgdd"};
    app.require_subcommand(1);
    Options o;

    auto* ingest = app.add_subcommand("ingest", "Parse CSV/N-Triples/Turtle under the config's mapping into canonical CSV");
    ingest->add_option("--data", o.data, "Input file (.csv, .nt, .ttl)")->required();
    ingest->add_option("--config", o.config, "Run-config file (for the schema mapping)");
    ingest->add_option("--out", o.out, "Output file (.csv or .nt)")->required();

    auto* generate = app.add_subcommand("generate", "Write a synthetic benchmark dataset and its gold standard");
    generate->add_option("--entities", o.entities, "Base entity count")->capture_default_str();
    generate->add_option("--duplicates", o.duplicates, "Planted duplicate count")->capture_default_str();
    generate->add_option("--seed", o.seed, "Random seed")->capture_default_str();
    generate->add_option("--out", o.out, "Dataset output, canonical property names (.csv or .nt)")->required();
    generate->add_option("--gold", o.gold, "Gold standard CSV output")->required();
    generate->add_option("--raw", o.raw, "Also write the dataset with source property names (.csv)");

    auto* run = app.add_subcommand("run", "Block, compare and threshold; write scored assertions");
    run->add_option("--config", o.config, "Run-config file")->required();
    run->add_option("--data", o.data, "Dataset (.csv, .nt, .ttl)")->required();
    run->add_option("--data2", o.data2, "Second dataset, for linkage mode");
    run->add_option("--out", o.out, "Results output (JSON lines)")->required();
    run->add_option("--floor", o.floor, "Also record scored pairs down to this similarity");
    run->add_option("--report", o.report, "Run report output (JSON)");

    auto* evaluate = app.add_subcommand("evaluate", "Precision, recall and F1 of results against a gold standard");
    evaluate->add_option("--results", o.results, "Results file")->required();
    evaluate->add_option("--gold", o.gold, "Gold standard CSV")->required();
    evaluate->add_option("--config", o.config, "Run-config file (threshold, world assumption)");
    evaluate->add_option("--threshold", o.threshold, "Acceptance threshold (default: the config's)");
    evaluate->add_flag("--closed-world", o.closed_world, "Count unlabeled accepted pairs as false positives");
    evaluate->add_option("--out", o.out, "Report output (JSON)");

    auto* sweep = app.add_subcommand("sweep", "Evaluate the same results at several thresholds");
    sweep->add_option("--results", o.results, "Results file (run with --floor at or below the lowest threshold)")
        ->required();
    sweep->add_option("--gold", o.gold, "Gold standard CSV")->required();
    sweep->add_option("--config", o.config, "Run-config file (sweep thresholds, world assumption)");
    sweep->add_option("--thresholds", o.thresholds, "Comma-separated thresholds, e.g. 0.9,0.8");
    sweep->add_flag("--closed-world", o.closed_world, "Count unlabeled accepted pairs as false positives");
    sweep->add_option("--out", o.out, "Report output (JSON)");

    auto* learn = app.add_subcommand("learn", "Learn a matching configuration with a genetic algorithm");
    learn->add_option("--config", o.config, "Run-config file (GA settings, search space)")->required();
    learn->add_option("--data", o.data, "Dataset")->required();
    learn->add_option("--gold", o.gold, "Gold standard CSV")->required();
    learn->add_option("--out", o.out, "Run-config output with the learned match section")->required();
    learn->add_option("--trace", o.trace, "Fitness trace output (JSON)");

    auto* fuse = app.add_subcommand("fuse", "Merge each equivalence class into one entity");
    fuse->add_option("--config", o.config, "Run-config file (fusion policy, threshold)")->required();
    fuse->add_option("--data", o.data, "Dataset")->required();
    fuse->add_option("--results", o.results, "Results file")->required();
    fuse->add_option("--gold", o.gold, "Gold standard CSV; labels confirm or reject pairs");
    fuse->add_option("--threshold", o.threshold, "Acceptance threshold (default: the config's)");
    fuse->add_option("--out", o.out, "Fused dataset output (.csv or .nt)")->required();
    fuse->add_option("--decisions", o.decisions, "Decision log output (JSON lines)")->required();

    auto* label = app.add_subcommand("label", "Label candidate pairs interactively: y(es), n(o), r(elated), s(kip), q(uit)");
    label->add_option("--results", o.results, "Results file")->required();
    label->add_option("--gold", o.gold, "Gold standard CSV; created if missing, labels are appended")->required();
    label->add_option("--data", o.data, "Dataset, to show property values");
    label->add_option("--config", o.config, "Run-config file (for the schema mapping)");
    label->add_option("--labeler", o.labeler, "Name recorded with each label")->capture_default_str();
    label->add_option("--limit", o.limit, "Pairs to present")->capture_default_str();

    auto* features = app.add_subcommand("features", "Per-property fill rate, distinctness and standalone F1");
    features->add_option("--data", o.data, "Dataset")->required();
    features->add_option("--gold", o.gold, "Gold standard CSV")->required();
    features->add_option("--config", o.config, "Run-config file (mapping, blocking, world assumption)");
    features->add_flag("--closed-world", o.closed_world, "Count unlabeled accepted pairs as false positives");
    features->add_option("--out", o.out, "Report output (JSON)");

    auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
    serve->add_option("--host", o.host, "Bind address")->capture_default_str();
    serve->add_option("--port", o.port, "Port")->capture_default_str();
    serve->add_option("--data-dir", o.data_dir, "Storage directory")->capture_default_str();
    serve->add_option("--token", o.token, "Bearer token (default: $KGDD_TOKEN, else random)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_config;
    }

    try {
        if (*ingest) {
            const RunConfig c = config_or_default(o.config);
            write_dataset(load_dataset(o.data, c.mapping, err), o.out);
        } else if (*generate) {
            SyntheticSpec spec;
            spec.entity_count = o.entities;
            spec.duplicate_count = o.duplicates;
            spec.seed = o.seed;
            spec.validate();
            const SyntheticData data = generate_synthetic(spec);
            write_dataset(data.dataset, o.out);
            if (!o.raw.empty()) write_dataset(data.raw, o.raw);
            auto g = open_out(o.gold);
            write_gold(data.gold, g);
            close_out(g, o.gold);
            out << data.dataset.entities.size() << " entities, " << data.planted.size() << " planted duplicates, "
                << data.gold.size() << " labels\n";
        } else if (*run) {
            const RunConfig c = load_run_config(o.config);
            RunOptions options;
            if (o.floor >= 0.0) options.record_floor = o.floor;
            const Dataset a = load_dataset(o.data, c.mapping, err);
            RunResult result;
            if (o.data2.empty()) {
                result = run_dedup(a, c.match, options);
            } else {
                result = run_linkage(a, load_dataset(o.data2, c.mapping, err), c.match, options);
            }
            auto f = open_out(o.out);
            write_results(result.assertions, f);
            close_out(f, o.out);
            if (!o.report.empty()) {
                auto r = open_out(o.report);
                r << to_json(result.report).dump(2) << "\n";
                close_out(r, o.report);
            }
            for (const auto& w : result.report.warnings) err << "warning: " << w << "\n";
            out << result.report.candidate_count << " candidates, " << result.report.scored_count << " scored, "
                << result.report.accepted_count << " accepted in " << std::fixed << std::setprecision(2)
                << result.report.wall_time_seconds << " s\n";
        } else if (*evaluate) {
            const RunConfig c = config_or_default(o.config);
            const double t = o.threshold >= 0.0 ? o.threshold : c.match.accept_threshold;
            const auto world =
                o.closed_world || c.world == WorldAssumption::closed ? WorldAssumption::closed : WorldAssumption::open;
            const auto assertions = load_results(o.results);
            const EvalReport report = score(accepted_pairs(assertions, t), load_gold(o.gold), world);
            std::ostringstream lbl;
            lbl << t;
            const std::vector<std::pair<std::string, EvalReport>> rows{{lbl.str(), report}};
            out << eval_table(rows);
            if (!o.out.empty()) {
                auto f = open_out(o.out);
                Json j = to_json(report);
                j["threshold"] = t;
                f << j.dump(2) << "\n";
                close_out(f, o.out);
            }
        } else if (*sweep) {
            const RunConfig c = config_or_default(o.config);
            const auto thresholds = o.thresholds.empty() ? c.sweep : parse_thresholds(o.thresholds);
            const auto world =
                o.closed_world || c.world == WorldAssumption::closed ? WorldAssumption::closed : WorldAssumption::open;
            const auto assertions = load_results(o.results);
            const auto reports = threshold_sweep(assertions, load_gold(o.gold), thresholds, world);
            std::vector<std::pair<std::string, EvalReport>> rows;
            Json j = Json::array();
            for (const auto& [t, r] : reports) {
                std::ostringstream lbl;
                lbl << t;
                rows.emplace_back(lbl.str(), r);
                Json row = to_json(r);
                row["threshold"] = t;
                j.push_back(std::move(row));
            }
            out << eval_table(rows);
            if (!o.out.empty()) {
                auto f = open_out(o.out);
                f << j.dump(2) << "\n";
                close_out(f, o.out);
            }
        } else if (*learn) {
            RunConfig c = load_run_config(o.config);
            const Dataset ds = load_dataset(o.data, c.mapping, err);
            GAParams params = c.ga;
            if (c.ga_default_space) params.space = default_search_space(ds);
            if (c.ga_seed_with_match) params.seeds.push_back(c.match);
            const LearnResult result = learn_config(ds, load_gold(o.gold), params);
            c.match = result.best;
            auto f = open_out(o.out);
            f << dump_run_config(c) << "\n";
            close_out(f, o.out);
            if (!o.trace.empty()) {
                auto t = open_out(o.trace);
                t << Json{{"bestFitness", result.best_fitness}, {"fitnessTrace", result.fitness_trace}}.dump(2)
                  << "\n";
                close_out(t, o.trace);
            }
            out << "best F1 " << std::fixed << std::setprecision(4) << result.best_fitness << " after "
                << result.fitness_trace.size() << " generations\n";
        } else if (*fuse) {
            const RunConfig c = load_run_config(o.config);
            const Dataset ds = load_dataset(o.data, c.mapping, err);
            const double t = o.threshold >= 0.0 ? o.threshold : c.match.accept_threshold;
            const GoldStandard gold = o.gold.empty() ? GoldStandard{} : load_gold(o.gold);
            const auto assertions = load_results(o.results);
            c.fusion.validate(ds.entities);
            const auto ids = ds.ids();
            const auto classes = equivalence_classes(ids, confirmed_pairs(assertions, gold, t));
            std::vector<FusedEntity> fused;
            Dataset result{ds.id + "-fused", {}, ds.source_label};
            for (const auto& cls : classes) {
                if (cls.members.size() == 1) {
                    result.entities.push_back(*ds.find(cls.members.front()));
                } else {
                    fused.push_back(fuse_class(cls, ds.entities, c.fusion));
                    result.entities.push_back(fused.back().as_entity());
                }
            }
            std::sort(result.entities.begin(), result.entities.end(),
                      [](const Entity& x, const Entity& y) { return x.id < y.id; });
            write_dataset(result, o.out);
            auto d = open_out(o.decisions);
            write_decisions(fused, d);
            close_out(d, o.decisions);
            std::size_t unresolved = 0;
            for (const auto& f : fused) unresolved += f.unresolved.empty() ? 0 : 1;
            out << fused.size() << " classes fused, " << unresolved << " need review\n";
        } else if (*label) {
            const auto assertions = load_results(o.results);
            GoldStandard gold;
            const bool exists = fs::exists(o.gold);
            if (exists) gold = load_gold(o.gold);
            std::optional<Dataset> ds;
            if (!o.data.empty()) ds = load_dataset(o.data, config_or_default(o.config).mapping, err);
            std::ofstream g(o.gold, std::ios::binary | std::ios::app);
            if (!g) throw Error("cannot write " + o.gold);
            if (!exists) g << gold_header() << "\n" << std::flush;

            const auto queue = next_candidates_for_labeling(assertions, gold, o.limit);
            std::size_t recorded = 0;
            for (std::size_t i = 0; i < queue.size(); ++i) {
                const auto& a = queue[i];
                out << "[" << i + 1 << "/" << queue.size() << "] sim " << std::fixed << std::setprecision(4) << a.sim
                    << "\n";
                print_entity(ds ? ds->find(a.pair.first()) : nullptr, a.pair.first(), out);
                print_entity(ds ? ds->find(a.pair.second()) : nullptr, a.pair.second(), out);
                std::optional<Verdict> verdict;
                bool quit = false;
                for (;;) {
                    out << "duplicate? [y]es [n]o [r]elated [s]kip [q]uit: " << std::flush;
                    std::string line;
                    if (!std::getline(in, line)) {
                        quit = true;
                        break;
                    }
                    const char key = line.empty() ? '\0' : static_cast<char>(std::tolower(line.front()));
                    if (key == 'y') verdict = Verdict::same;
                    else if (key == 'n') verdict = Verdict::different;
                    else if (key == 'r') verdict = Verdict::related;
                    else if (key == 'q') quit = true;
                    else if (key != 's') continue;
                    break;
                }
                if (quit) break;
                if (!verdict) continue;
                const auto now = std::chrono::duration_cast<std::chrono::seconds>(
                                     std::chrono::system_clock::now().time_since_epoch())
                                     .count();
                g << gold_row(LabelRecord{a.pair, *verdict, o.labeler, now}) << "\n" << std::flush;
                if (!g) throw Error("cannot write " + o.gold);
                ++recorded;
            }
            out << recorded << " labels recorded\n";
        } else if (*features) {
            const RunConfig c = config_or_default(o.config);
            const Dataset ds = load_dataset(o.data, c.mapping, err);
            const auto world =
                o.closed_world || c.world == WorldAssumption::closed ? WorldAssumption::closed : WorldAssumption::open;
            BlockingSpec blocking;
            if (!o.config.empty()) blocking = c.match.blocking;
            const auto rows = feature_report(ds, load_gold(o.gold), world, blocking);
            out << feature_table(rows);
            if (!o.out.empty()) {
                auto f = open_out(o.out);
                Json j = Json::array();
                for (const auto& r : rows) j.push_back(to_json(r));
                f << j.dump(2) << "\n";
                close_out(f, o.out);
            }
        } else if (*serve) {
            ServerOptions options;
            options.host = o.host;
            options.port = o.port;
            options.data_dir = o.data_dir;
            options.token = o.token;
            if (options.token.empty()) {
                if (const char* env = std::getenv("KGDD_TOKEN")) options.token = env;
            }
            if (options.token.empty()) {
                options.token = random_token();
                out << "token: " << options.token << "\n" << std::flush;
            }
            Server server(options);
            server.listen();
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << "\n";
        return exit_config;
    } catch (const DataError& e) {
        err << "data error: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_runtime;
    }
    return exit_ok;
}

}  // namespace kgdd
