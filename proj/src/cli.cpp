#include "ccrf/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include "ccrf/constrained_ilp.hpp"
#include "ccrf/constraints.hpp"
#include "ccrf/crf_model.hpp"
#include "ccrf/dataset.hpp"
#include "ccrf/error.hpp"
#include "ccrf/eval.hpp"
#include "ccrf/lagrangian.hpp"

namespace ccrf::cli {

namespace {

namespace fs = std::filesystem;

class usage_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised under --strict when a sequence cannot be decoded exactly.
class strict_abort : public std::runtime_error {
public:
    strict_abort(const std::string& what, const char* error_class) : std::runtime_error(what), error_class_(error_class) {}
    const char* error_class() const noexcept { return error_class_; }

private:
    const char* error_class_;
};

/// Output files are written next to their destination and renamed into place
/// only once every output of the command is complete.
class StagedOutputs {
public:
    StagedOutputs() = default;
    StagedOutputs(const StagedOutputs&) = delete;
    StagedOutputs& operator=(const StagedOutputs&) = delete;

    ~StagedOutputs() {
        for (auto& e : entries_) {
            if (e.stream) e.stream->close();
            std::error_code ec;
            fs::remove(e.staging, ec);
        }
    }

    std::ostream& open(const fs::path& destination) {
        Entry e;
        e.destination = destination;
        e.staging = destination;
        e.staging += ".partial";
        e.stream = std::make_unique<std::ofstream>(e.staging, std::ios::binary | std::ios::trunc);
        if (!*e.stream) throw io_error("cannot write '" + destination.string() + "'");
        entries_.push_back(std::move(e));
        return *entries_.back().stream;
    }

    void commit() {
        for (auto& e : entries_) {
            e.stream->flush();
            if (!*e.stream) throw io_error("write to '" + e.destination.string() + "' failed");
            e.stream->close();
        }
        for (auto& e : entries_) {
            std::error_code ec;
            fs::rename(e.staging, e.destination, ec);
            if (ec) throw io_error("cannot move output into '" + e.destination.string() + "': " + ec.message());
        }
        entries_.clear();
    }

private:
    struct Entry {
        fs::path destination;
        fs::path staging;
        std::unique_ptr<std::ofstream> stream;
    };
    std::vector<Entry> entries_;
};

void require(const fs::path& p, const char* flag, Command c) {
    if (p.empty()) throw usage_error(std::string(command_name(c)) + " needs --" + flag);
}

std::ifstream open_input(const fs::path& p, const char* what) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw data_error(std::string("cannot open ") + what + " '" + p.string() + "'");
    return in;
}

CrfModel load_model(const fs::path& p) {
    auto in = open_input(p, "model");
    return read_model(in);
}

std::vector<WeightedConstraint> load_constraints(const fs::path& p, const LabelAlphabet& alphabet) {
    auto in = open_input(p, "constraints");
    auto cs = read_constraints(in);
    for (const auto& c : cs) {
        try {
            validate(c.templ, alphabet);
        } catch (const std::invalid_argument& e) {
            throw data_error("constraints: " + std::string(e.what()));
        }
    }
    return cs;
}

struct DecodeOutcome {
    std::vector<std::vector<std::string>> labels;
    std::vector<std::string> trace_rows;
    std::size_t fallbacks = 0;
};

class SequenceDecoder {
public:
    SequenceDecoder(const CrfModel& model, const RunConfig& config, const std::vector<WeightedConstraint>& constraints,
                    std::ostream& err)
        : model_(model), config_(config), constraints_(constraints), err_(err) {}

    DecodeOutcome decode(const Corpus& corpus, Decoder decoder) {
        DecodeOutcome out;
        const auto& alphabet = model_.alphabet();
        for (std::size_t i = 0; i < corpus.size(); ++i) {
            const Trellis trellis = model_.build_trellis(corpus.sequences[i].x);
            PathAssignment path;
            switch (decoder) {
                case Decoder::viterbi:
                    path = viterbi(trellis);
                    break;
                case Decoder::exact_constrained:
                    path = exact(trellis, i, out.fallbacks);
                    break;
                case Decoder::lagrangian: {
                    DualOptions options;
                    options.max_iterations = config_.max_iterations;
                    options.stall_iterations = config_.stall_iterations;
                    options.tolerance = config_.tolerance;
                    const DualResult r = solve_dual(trellis, system(trellis.length()), options);
                    if (!r.primal_feasible) {
                        err_ << "warning: sequence " << i << ": lagrangian recovered no feasible path ("
                             << status_name(r.status) << ")\n";
                    }
                    for (const auto& it : r.history) out.trace_rows.push_back(std::to_string(i) + "," + trace_csv_row(it));
                    path = r.path;
                    break;
                }
            }
            out.labels.push_back(path.label_names(alphabet));
        }
        return out;
    }

private:
    const ConstraintSystem& system(std::size_t n) {
        auto it = systems_.find(n);
        if (it == systems_.end()) {
            it = systems_.emplace(n, ConstraintSystem::build(model_.alphabet(), n, constraints_)).first;
        }
        return it->second;
    }

    PathAssignment exact(const Trellis& trellis, std::size_t i, std::size_t& fallbacks) {
        const char* error_class = nullptr;
        std::string message;
        try {
            ConstrainedProblem problem(trellis, system(trellis.length()), *config_.tau);
            return solve_min_violation(problem, config_.cap).path;
        } catch (const cap_exceeded& e) {
            error_class = "cap_exceeded";
            message = e.what();
        } catch (const infeasible_error& e) {
            error_class = "infeasible";
            message = e.what();
        }
        const std::string where = "sequence " + std::to_string(i) + ": " + message;
        if (config_.strict) throw strict_abort(where, error_class);
        err_ << "warning: " << error_class << ": " << where << "; labeled by viterbi\n";
        ++fallbacks;
        return viterbi(trellis);
    }

    const CrfModel& model_;
    const RunConfig& config_;
    const std::vector<WeightedConstraint>& constraints_;
    std::ostream& err_;
    std::map<std::size_t, ConstraintSystem> systems_;
};

Corpus with_labels(const Corpus& corpus, const std::vector<std::vector<std::string>>& labels) {
    Corpus out;
    for (std::size_t i = 0; i < corpus.size(); ++i) out.add(TaggedSequence{corpus.sequences[i].x, labels[i]});
    return out;
}

void check_decoder_inputs(const RunConfig& config, Decoder decoder) {
    if (decoder == Decoder::viterbi) return;
    require(config.constraints, "constraints", config.command);
    if (decoder == Decoder::exact_constrained && !config.tau) {
        throw usage_error(std::string(command_name(config.command)) + " with exact_constrained needs --tau");
    }
}

void check_numbers(const RunConfig& config) {
    if (config.tau && !(*config.tau >= 0.0 && *config.tau <= 1.0)) throw usage_error("--tau must lie in [0, 1]");
    if (config.max_iterations == 0) throw usage_error("--max_iterations must be >= 1");
    if (!(config.tolerance >= 0.0)) throw usage_error("--tolerance must be >= 0");
    if (!(config.max_violation_rate >= 0.0 && config.max_violation_rate <= 1.0)) {
        throw usage_error("--max_violation_rate must lie in [0, 1]");
    }
}

int run_train(const RunConfig& config) {
    require(config.corpus, "corpus", config.command);
    require(config.output, "output", config.command);
    const Corpus corpus = load_corpus(config.corpus);
    if (corpus.size() == 0) throw data_error("training corpus is empty");
    const LabelAlphabet alphabet = corpus.alphabet();
    const auto data = corpus.indexed(alphabet);
    const CrfModel model = train_perceptron(alphabet, data, {config.epochs, 1.0});
    StagedOutputs outputs;
    write_model(outputs.open(config.output), model);
    outputs.commit();
    return kExitOk;
}

int run_mine(const RunConfig& config) {
    require(config.corpus, "corpus", config.command);
    require(config.output, "output", config.command);
    const Corpus corpus = load_corpus(config.corpus);
    if (corpus.size() == 0) throw data_error("corpus is empty");
    const auto gold = corpus.gold();
    const auto mined = mine(gold, {config.min_support, config.max_violation_rate, config.separators});
    std::vector<WeightedConstraint> cs;
    for (const auto& m : mined) cs.push_back({m.templ, m.cost});
    StagedOutputs outputs;
    write_constraints(outputs.open(config.output), cs);
    outputs.commit();
    return kExitOk;
}

int run_decode(const RunConfig& config, std::ostream& err) {
    require(config.model, "model", config.command);
    require(config.corpus, "corpus", config.command);
    require(config.output, "output", config.command);
    check_decoder_inputs(config, config.decoder);
    const CrfModel model = load_model(config.model);
    const Corpus corpus = load_corpus(config.corpus);
    std::vector<WeightedConstraint> cs;
    if (config.decoder != Decoder::viterbi) cs = load_constraints(config.constraints, model.alphabet());

    SequenceDecoder decoder(model, config, cs, err);
    const DecodeOutcome result = decoder.decode(corpus, config.decoder);
    StagedOutputs outputs;
    save_corpus(outputs.open(config.output), with_labels(corpus, result.labels));
    if (!config.trace.empty() && config.decoder == Decoder::lagrangian) {
        auto& trace = outputs.open(config.trace);
        trace << "sequence," << trace_csv_header() << '\n';
        for (const auto& row : result.trace_rows) trace << row << '\n';
    }
    outputs.commit();
    return result.fallbacks ? kExitInfeasible : kExitOk;
}

int run_evaluate(const RunConfig& config, std::ostream& out) {
    require(config.corpus, "corpus", config.command);
    require(config.predicted, "predicted", config.command);
    const Corpus gold = load_corpus(config.corpus);
    const Corpus predicted = load_corpus(config.predicted);
    if (gold.size() != predicted.size()) {
        throw data_error("gold corpus has " + std::to_string(gold.size()) + " sequences, predicted has " +
                         std::to_string(predicted.size()));
    }
    for (std::size_t i = 0; i < gold.size(); ++i) {
        if (gold.sequences[i].x.tokens != predicted.sequences[i].x.tokens) {
            throw data_error("sequence " + std::to_string(i) + " has different tokens in the gold and predicted corpora");
        }
    }
    const auto report = evaluate(gold.gold(), predicted.gold());
    if (config.output.empty()) {
        write_report(out, "predicted", report);
        return kExitOk;
    }
    StagedOutputs outputs;
    write_report(outputs.open(config.output), "predicted", report);
    outputs.commit();
    return kExitOk;
}

int run_compare(const RunConfig& config, std::ostream& out, std::ostream& err) {
    require(config.model, "model", config.command);
    require(config.corpus, "corpus", config.command);
    require(config.constraints, "constraints", config.command);
    check_decoder_inputs(config, Decoder::exact_constrained);
    fs::path trace_path = config.trace;
    if (trace_path.empty()) {
        if (config.output.empty()) throw usage_error("compare needs --trace or --output");
        trace_path = config.output;
        trace_path += ".trace.csv";
    }
    const CrfModel model = load_model(config.model);
    const Corpus corpus = load_corpus(config.corpus);
    const auto cs = load_constraints(config.constraints, model.alphabet());
    const auto gold = corpus.gold();

    SequenceDecoder decoder(model, config, cs, err);
    std::vector<std::pair<std::string, EvaluationReport>> reports;
    std::size_t fallbacks = 0;
    std::vector<std::string> trace_rows;
    for (Decoder d : {Decoder::viterbi, Decoder::exact_constrained, Decoder::lagrangian}) {
        DecodeOutcome result = decoder.decode(corpus, d);
        fallbacks += result.fallbacks;
        if (d == Decoder::lagrangian) trace_rows = std::move(result.trace_rows);
        reports.emplace_back(decoder_name(d), evaluate(gold, result.labels));
    }

    StagedOutputs outputs;
    write_comparison(config.output.empty() ? out : outputs.open(config.output), reports);
    auto& trace = outputs.open(trace_path);
    trace << "sequence," << trace_csv_header() << '\n';
    for (const auto& row : trace_rows) trace << row << '\n';
    outputs.commit();
    return fallbacks ? kExitInfeasible : kExitOk;
}

int run_generate(const RunConfig& config) {
    require(config.output, "output", config.command);
    SyntheticSpec spec;
    if (!config.spec.empty()) {
        auto in = open_input(config.spec, "synthetic spec");
        spec = read_synthetic_spec(in);
    }
    if (config.seed) spec.seed = *config.seed;
    Corpus corpus;
    try {
        corpus = generate_synthetic(spec);
    } catch (const std::invalid_argument& e) {
        throw data_error(std::string("synthetic spec: ") + e.what());
    }
    StagedOutputs outputs;
    save_corpus(outputs.open(config.output), corpus);
    outputs.commit();
    return kExitOk;
}

int fail(std::ostream& err, const char* error_class, const std::string& message, int code) {
    err << "error: " << error_class << ": " << message << '\n';
    return code;
}

}  // namespace

const char* command_name(Command c) {
    switch (c) {
        case Command::train: return "train";
        case Command::mine: return "mine";
        case Command::decode: return "decode";
        case Command::evaluate: return "evaluate";
        case Command::compare: return "compare";
        case Command::generate: return "generate";
    }
    return "unknown";
}

const char* decoder_name(Decoder d) {
    switch (d) {
        case Decoder::viterbi: return "viterbi";
        case Decoder::exact_constrained: return "exact_constrained";
        case Decoder::lagrangian: return "lagrangian";
    }
    return "unknown";
}

int run(const RunConfig& config, std::ostream& out, std::ostream& err) {
    try {
        check_numbers(config);
        switch (config.command) {
            case Command::train: return run_train(config);
            case Command::mine: return run_mine(config);
            case Command::decode: return run_decode(config, err);
            case Command::evaluate: return run_evaluate(config, out);
            case Command::compare: return run_compare(config, out, err);
            case Command::generate: return run_generate(config);
        }
        return fail(err, "usage", "unknown command", kExitUsage);
    } catch (const usage_error& e) {
        return fail(err, "usage", e.what(), kExitUsage);
    } catch (const strict_abort& e) {
        return fail(err, e.error_class(), e.what(), kExitInfeasible);
    } catch (const data_error& e) {
        return fail(err, "data", e.what(), kExitData);
    } catch (const io_error& e) {
        return fail(err, "io", e.what(), kExitData);
    } catch (const std::invalid_argument& e) {
        return fail(err, "data", e.what(), kExitData);
    } catch (const std::exception& e) {
        return fail(err, "internal", e.what(), 1);
    }
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Constrained decoding for linear-chain CRFs", "ccrf"};
    app.set_config("--config", "", "File of key=value lines setting any flag below; the command line wins");
    app.option_defaults()->always_capture_default();

    RunConfig config;
    const std::map<std::string, Command> commands{{"train", Command::train},       {"mine", Command::mine},
                                                  {"decode", Command::decode},     {"evaluate", Command::evaluate},
                                                  {"compare", Command::compare},   {"generate", Command::generate}};
    const std::map<std::string, Decoder> decoders{{"viterbi", Decoder::viterbi},
                                                  {"exact_constrained", Decoder::exact_constrained},
                                                  {"lagrangian", Decoder::lagrangian}};
    std::string command;
    app.add_option("command", command, "train | mine | decode | evaluate | compare | generate")
        ->required()
        ->type_name("COMMAND");
    app.add_option("--model", config.model, "Model file (written by train, read by decode and compare)");
    app.add_option("--corpus", config.corpus, "token<TAB>label corpus; gold labels for evaluate");
    app.add_option("--constraints", config.constraints, "Constraint file (kind<TAB>A<TAB>B[<TAB>D]<TAB>cost)");
    app.add_option("--predicted", config.predicted, "Predicted corpus for evaluate");
    app.add_option("--spec", config.spec, "Synthetic corpus description for generate");
    app.add_option("--output", config.output, "Output file");
    app.add_option("--trace", config.trace, "Lagrangian trace CSV");
    std::string decoder = decoder_name(config.decoder);
    app.add_option("--decoder", decoder, "viterbi | exact_constrained | lagrangian")->type_name("DECODER");
    double tau = 0.0;
    auto* tau_opt =
        app.add_option("--tau", tau, "Relative score floor in [0, 1] for exact_constrained")->default_str("");
    app.add_option("--max_iterations", config.max_iterations, "Lagrangian iteration cap");
    app.add_option("--stall_iterations", config.stall_iterations, "Lagrangian stall window");
    app.add_option("--tolerance", config.tolerance, "Lagrangian tolerance");
    std::uint64_t seed = 0;
    auto* seed_opt =
        app.add_option("--seed", seed, "Seed of the synthetic generator; overrides the spec file")->default_str("");
    app.add_option("--epochs", config.epochs, "Perceptron epochs");
    app.add_option("--min_support", config.min_support, "Minimum number of sequences a mined template fires on");
    app.add_option("--max_violation_rate", config.max_violation_rate, "Largest violation rate kept by mine");
    app.add_option("--separators", config.separators, "Labels allowed as D in state_change(A,D,B)")->delimiter(',');
    app.add_option("--cap", config.cap, "Largest path space the exact decoder will search");
    app.add_flag("--strict", config.strict, "Stop at the first sequence that cannot be decoded exactly");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        return fail(err, "usage", e.what(), kExitUsage);
    }
    const auto c = commands.find(command);
    if (c == commands.end()) return fail(err, "usage", "unknown command '" + command + "'", kExitUsage);
    config.command = c->second;
    const auto d = decoders.find(decoder);
    if (d == decoders.end()) return fail(err, "usage", "unknown decoder '" + decoder + "'", kExitUsage);
    config.decoder = d->second;
    if (tau_opt->count() > 0) config.tau = tau;
    if (seed_opt->count() > 0) config.seed = seed;
    return run(config, out, err);
}

}  // namespace ccrf::cli
