#include "midicls/cli.hpp"

#include "midicls/augment.hpp"
#include "midicls/errors.hpp"
#include "midicls/io.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace midicls {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

const char* const kExitCodeHelp =
    "Exit codes: 0 success, 1 internal error, 2 usage error, 3 I/O error,\n"
    "4 parse/format error, 5 data error, 6 shape error, 7 replay mismatch.";

std::string fmt_double(double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        try {
            out.push_back(std::stoi(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw DataError("not an integer: '" + item + "'");
    }
    return out;
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        if (item.empty()) continue;
        std::size_t used = 0;
        try {
            out.push_back(std::stod(item, &used));
        } catch (const std::exception&) {
            used = 0;
        }
        if (used != item.size()) throw DataError("not a number: '" + item + "'");
    }
    return out;
}

json file_entry(const std::string& path) { return {{"path", path}, {"fnv1a", file_digest(path)}}; }

// Collects what a command read and wrote, then serializes the manifest.
struct Manifest {
    std::string command;
    std::vector<std::string> args;
    json parameters = json::object();
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
    json extra = json::object();

    void write(const std::string& primary) const {
        json j;
        j["tool"] = "midicls";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["args"] = args;
        j["parameters"] = parameters;
        j["inputs"] = json::array();
        for (const auto& p : inputs) j["inputs"].push_back(file_entry(p));
        j["outputs"] = json::array();
        for (const auto& p : outputs) j["outputs"].push_back(file_entry(p));
        for (const auto& [k, v] : extra.items()) j[k] = v;
        write_text_file(manifest_path(primary), j.dump(2) + "\n");
    }
};

bool is_midi_file(const fs::path& p) {
    std::string ext = p.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext == ".mid" || ext == ".midi";
}

std::vector<fs::path> list_midi_files(const std::string& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) throw IOError("not a readable directory: " + dir);
    std::vector<fs::path> files;
    for (fs::directory_iterator it(dir, ec), end; !ec && it != end; it.increment(ec)) {
        if (it->is_regular_file() && is_midi_file(it->path())) files.push_back(it->path());
    }
    if (ec) throw IOError("cannot list " + dir + ": " + ec.message());
    std::sort(files.begin(), files.end());
    return files;
}

struct EncodedDir {
    std::vector<IdentifiedPiece> pieces;
    std::vector<std::pair<std::string, std::string>> skipped;  // id, reason
    std::vector<std::string> files;
};

EncodedDir encode_dir(const std::string& dir, const EncoderProfile& profile, int beats) {
    EncodedDir out;
    for (const fs::path& file : list_midi_files(dir)) {
        const std::string id = fs::relative(file, dir).generic_string();
        out.files.push_back(file.string());
        try {
            out.pieces.push_back({id, encode(build_piece(read_smf_file(file.string()), beats), profile)});
        } catch (const Error& e) {
            out.skipped.emplace_back(id, e.what());
        }
    }
    return out;
}

std::vector<std::vector<int>> corpus_ids(const std::vector<IdentifiedPiece>& pieces) {
    const Vocabulary& vocab = build_vocabulary();
    std::vector<std::vector<int>> out;
    for (const auto& p : pieces) out.push_back(vocab.ids_of(p.tokens));
    return out;
}

LabeledSet load_labeled(const std::string& ai_path, const std::string& composer_path) {
    LabeledSet data;
    for (auto& f : read_features_csv(ai_path)) {
        data.features.push_back(std::move(f));
        data.labels.push_back(kLabelAi);
    }
    for (auto& f : read_features_csv(composer_path)) {
        data.features.push_back(std::move(f));
        data.labels.push_back(kLabelComposer);
    }
    data.validate();
    return data;
}

json train_report_json(const TrainReport& r) {
    const ModelConfig& c = r.config;
    json j;
    j["config"] = {{"vocab_size", c.vocab_size}, {"embed_dim", c.embed_dim},     {"hidden_dim", c.hidden_dim},
                   {"learning_rate", c.learning_rate}, {"adam_beta1", c.adam_beta1}, {"adam_beta2", c.adam_beta2},
                   {"adam_epsilon", c.adam_epsilon},   {"epochs", c.epochs},         {"bptt_len", c.bptt_len},
                   {"seed", c.seed},                   {"use_bias", c.use_bias},     {"subsets", c.subsets},
                   {"heldout_fraction", c.heldout_fraction}};
    j["pieces"] = r.pieces;
    j["train_pieces"] = r.train_pieces;
    j["heldout_pieces"] = r.heldout_pieces;
    j["subset_tokens"] = r.subset_tokens;
    j["heldout_tokens"] = r.heldout_tokens;
    j["epoch_train_loss"] = r.epoch_train_loss;
    j["initial_heldout_loss"] = r.initial_heldout_loss;
    j["final_heldout_loss"] = r.final_heldout_loss;
    j["updates"] = r.updates;
    j["deviations"] = r.deviations;
    return j;
}

void add_lr_options(CLI::App& cmd, LrConfig& lr) {
    cmd.add_option("--lr", lr.learning_rate, "gradient-ascent step size")->capture_default_str();
    cmd.add_option("--max-iters", lr.max_iters, "iteration cap")->capture_default_str();
    cmd.add_option("--tol", lr.tol, "stop when the gradient max-norm falls below this")->capture_default_str();
    cmd.add_option("--l2", lr.l2, "L2 penalty on the weights")->capture_default_str();
}

std::vector<std::string> lr_args(const LrConfig& lr) {
    std::vector<std::string> a = {"--lr",  fmt_double(lr.learning_rate), "--max-iters", std::to_string(lr.max_iters),
                                  "--tol", fmt_double(lr.tol),           "--l2",        fmt_double(lr.l2)};
    if (!lr.fit_bias) a.push_back("--no-bias");
    return a;
}

json lr_json(const LrConfig& lr) {
    return {{"learning_rate", lr.learning_rate}, {"max_iters", lr.max_iters}, {"tol", lr.tol},
            {"l2", lr.l2},                       {"fit_bias", lr.fit_bias}};
}

struct Options {
    std::string in;
    std::vector<std::string> ins;
    std::string out;
    std::string profile = "figure";
    int beats = 4;
    std::string transpose = "4,-4";
    std::string tempo = "1.1,0.9";
    ModelConfig model;
    bool no_bias = false;
    std::string model_path;
    std::string clf_path;
    std::string ai_path;
    std::string composer_path;
    LrConfig lr;
    int folds = 10;
    std::uint64_t seed = 0;
    bool naive_folds = false;
    int n_per_class = 200;
    std::string manifest;
};

int cmd_synth(const Options& o, std::ostream& out) {
    const EncoderProfile profile = profile_from_name(o.profile);
    const SyntheticCorpus corpus = gen_synthetic(o.n_per_class, o.seed, profile);
    fs::create_directories(o.out);
    const std::string ai_file = (fs::path(o.out) / "ai.txt").string();
    const std::string composer_file = (fs::path(o.out) / "composer.txt").string();
    const auto to_items = [](const std::vector<TokenSeq>& seqs, const std::string& prefix) {
        std::vector<IdentifiedPiece> items;
        for (std::size_t i = 0; i < seqs.size(); ++i) {
            char id[32];
            std::snprintf(id, sizeof id, "%s-%05zu", prefix.c_str(), i);
            items.push_back({id, seqs[i]});
        }
        return items;
    };
    write_corpus(ai_file, to_items(corpus.ai_tokens, "ai"));
    write_corpus(composer_file, to_items(corpus.composer_tokens, "composer"));

    Manifest m;
    m.command = "synth-corpus";
    m.args = {"synth-corpus", "--out", o.out, "--n", std::to_string(o.n_per_class), "--seed", std::to_string(o.seed),
              "--profile", o.profile};
    m.parameters = {{"n_per_class", o.n_per_class}, {"seed", o.seed}, {"profile", o.profile}};
    m.outputs = {ai_file, corpus_ids_path(ai_file), composer_file, corpus_ids_path(composer_file)};
    m.write((fs::path(o.out) / "synth-corpus").string());
    out << "wrote " << o.n_per_class << " pieces per class to " << o.out << "\n";
    return exit_ok;
}

int cmd_encode(const Options& o, std::ostream& out) {
    const EncoderProfile profile = profile_from_name(o.profile);
    const EncodedDir enc = encode_dir(o.in, profile, o.beats);
    write_corpus(o.out, enc.pieces);
    std::string report = "id,error\n";
    for (const auto& [id, why] : enc.skipped) report += csv_field(id) + "," + csv_field(why) + "\n";
    const std::string skipped_path = o.out + ".skipped.csv";
    write_text_file(skipped_path, report);

    Manifest m;
    m.command = "encode";
    m.args = {"encode", "--in", o.in, "--out", o.out, "--profile", o.profile, "--beats", std::to_string(o.beats)};
    m.parameters = {{"profile", o.profile}, {"beats_per_measure", o.beats}};
    m.inputs = enc.files;
    m.outputs = {o.out, corpus_ids_path(o.out), skipped_path};
    m.extra["encoded"] = enc.pieces.size();
    m.extra["skipped"] = enc.skipped.size();
    m.write(o.out);
    out << "encoded " << enc.pieces.size() << " files, skipped " << enc.skipped.size() << "\n";
    return exit_ok;
}

int cmd_augment(const Options& o, std::ostream& out) {
    const EncoderProfile profile = profile_from_name(o.profile);
    AugmentSpec spec{parse_int_list(o.transpose), parse_double_list(o.tempo)};
    spec.validate();
    const std::vector<IdentifiedPiece> input = read_corpus(o.in);
    std::vector<NotePiece> pieces;
    for (const auto& p : input) pieces.push_back(decode(p.tokens, profile, o.beats));
    const AugmentResult result = augment_corpus(pieces, spec);

    std::vector<IdentifiedPiece> items;
    for (const AugmentedPiece& a : result.pieces) {
        const std::string& src = input[a.source].id;
        items.push_back({a.origin == "original" ? src : src + "#" + a.origin, encode(a.piece, profile)});
    }
    write_corpus(o.out, items);

    Manifest m;
    m.command = "augment";
    m.args = {"augment", "--in", o.in, "--out", o.out, "--transpose", o.transpose, "--tempo", o.tempo,
              "--profile", o.profile, "--beats", std::to_string(o.beats)};
    m.parameters = {{"transpositions", spec.transpositions}, {"tempo_factors", spec.tempo_factors},
                    {"profile", o.profile}, {"beats_per_measure", o.beats}};
    m.inputs = {o.in};
    if (fs::exists(corpus_ids_path(o.in))) m.inputs.push_back(corpus_ids_path(o.in));
    m.outputs = {o.out, corpus_ids_path(o.out)};
    json skipped = json::array();
    for (const SkipRecord& s : result.skipped)
        skipped.push_back({{"id", input[s.source].id}, {"origin", s.origin}, {"reason", s.reason}});
    m.extra["pieces_out"] = items.size();
    m.extra["skipped_count"] = result.skipped.size();
    m.extra["skipped"] = skipped;
    m.write(o.out);
    out << "augmented " << input.size() << " pieces into " << items.size() << " (" << result.skipped.size()
        << " skipped)\n";
    return exit_ok;
}

int cmd_train_lm(const Options& o, std::ostream& out) {
    ModelConfig config = o.model;
    config.seed = o.seed;
    config.use_bias = !o.no_bias;
    std::vector<IdentifiedPiece> pieces;
    for (const auto& path : o.ins) {
        auto part = read_corpus(path);
        pieces.insert(pieces.end(), part.begin(), part.end());
    }
    const auto start = std::chrono::steady_clock::now();
    const TrainResult result = train_lm(corpus_ids(pieces), config, [&](int epoch, double loss) {
        out << "epoch " << epoch + 1 << " train loss " << loss << "\n" << std::flush;
    });
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    save_model(result.params, config, o.out);
    const std::string report_path = o.out + ".report.json";
    write_text_file(report_path, train_report_json(result.report).dump(2) + "\n");

    Manifest m;
    m.command = "train-lm";
    m.args = {"train-lm"};
    for (const auto& p : o.ins) m.args.insert(m.args.end(), {"--in", p});
    m.args.insert(m.args.end(),
                  {"--out", o.out, "--embed", std::to_string(config.embed_dim), "--hidden",
                   std::to_string(config.hidden_dim), "--epochs", std::to_string(config.epochs), "--lr",
                   fmt_double(config.learning_rate), "--beta1", fmt_double(config.adam_beta1), "--beta2",
                   fmt_double(config.adam_beta2), "--eps", fmt_double(config.adam_epsilon), "--bptt",
                   std::to_string(config.bptt_len), "--seed", std::to_string(config.seed)});
    if (o.no_bias) m.args.push_back("--no-bias");
    m.parameters = train_report_json(result.report)["config"];
    m.inputs = o.ins;
    m.outputs = {o.out, report_path};
    m.write(o.out);
    out << "held-out cross-entropy " << result.report.initial_heldout_loss << " -> "
        << result.report.final_heldout_loss << " nats (" << secs << " s)\n";
    return exit_ok;
}

int cmd_extract(const Options& o, std::ostream& out) {
    const auto [params, config] = load_model(o.model_path);
    const std::vector<IdentifiedPiece> pieces = read_corpus(o.in);
    const Vocabulary& vocab = build_vocabulary();
    std::vector<FeatureVector> features;
    for (const auto& p : pieces) features.push_back(extract_features(params, vocab.ids_of(p.tokens), p.id));
    write_features_csv(o.out, features);

    Manifest m;
    m.command = "extract";
    m.args = {"extract", "--model", o.model_path, "--in", o.in, "--out", o.out};
    m.parameters = {{"hidden_dim", config.hidden_dim}};
    m.inputs = {o.model_path, o.in};
    if (fs::exists(corpus_ids_path(o.in))) m.inputs.push_back(corpus_ids_path(o.in));
    m.outputs = {o.out};
    m.write(o.out);
    out << "extracted " << features.size() << " feature vectors of size " << config.hidden_dim << "\n";
    return exit_ok;
}

int cmd_train_clf(const Options& o, std::ostream& out) {
    LrConfig lr = o.lr;
    lr.fit_bias = !o.no_bias;
    const LabeledSet data = load_labeled(o.ai_path, o.composer_path);
    const LrFit fit = lr_train(data, lr);
    write_text_file(o.out, lr_to_json(fit.model, lr, fit.report));

    Manifest m;
    m.command = "train-clf";
    m.args = {"train-clf", "--ai", o.ai_path, "--composer", o.composer_path, "--out", o.out};
    const auto extra = lr_args(lr);
    m.args.insert(m.args.end(), extra.begin(), extra.end());
    m.parameters = lr_json(lr);
    m.inputs = {o.ai_path, o.composer_path};
    m.outputs = {o.out};
    m.extra["iterations"] = fit.report.iterations;
    m.extra["converged"] = fit.report.converged;
    m.write(o.out);
    int correct = 0;
    for (std::size_t i = 0; i < data.size(); ++i)
        correct += (lr_predict(fit.model, data.features[i]) > 0.5 ? 1 : 0) == data.labels[i];
    out << "trained on " << data.size() << " samples, " << fit.report.iterations << " iterations, training accuracy "
        << static_cast<double>(correct) / static_cast<double>(data.size()) << "\n";
    return exit_ok;
}

int cmd_cross_validate(const Options& o, std::ostream& out) {
    LrConfig lr = o.lr;
    lr.fit_bias = !o.no_bias;
    const LabeledSet data = load_labeled(o.ai_path, o.composer_path);
    std::optional<std::vector<std::string>> groups;
    if (!o.naive_folds) {
        groups.emplace();
        for (const auto& f : data.features) groups->push_back(group_of(f.source_id));
    }
    const CvReport report = cross_validate(data, o.folds, o.seed, lr, groups);
    const std::string text = format_cv_report(report);
    write_text_file(o.out, text);
    const std::string folds_path = o.out + ".folds.csv";
    write_text_file(folds_path, cv_folds_csv(report));

    Manifest m;
    m.command = "cross-validate";
    m.args = {"cross-validate", "--ai", o.ai_path, "--composer", o.composer_path, "--out", o.out,
              "--folds", std::to_string(o.folds), "--seed", std::to_string(o.seed)};
    const auto extra = lr_args(lr);
    m.args.insert(m.args.end(), extra.begin(), extra.end());
    if (o.naive_folds) m.args.push_back("--naive-folds");
    m.parameters = lr_json(lr);
    m.parameters["folds"] = o.folds;
    m.parameters["seed"] = o.seed;
    m.parameters["group_aware"] = !o.naive_folds;
    m.inputs = {o.ai_path, o.composer_path};
    m.outputs = {o.out, folds_path};
    m.extra["mean_accuracy"] = report.mean_accuracy;
    m.write(o.out);
    out << text;
    return exit_ok;
}

int cmd_score(const Options& o, std::ostream& out) {
    const auto [params, config] = load_model(o.model_path);
    const LrModel lr = lr_from_json(read_text_file(o.clf_path));
    std::vector<IdentifiedPiece> pieces;
    std::vector<ScoreError> failures;
    std::vector<std::string> inputs = {o.model_path, o.clf_path};
    if (fs::is_directory(o.in)) {
        const EncodedDir enc = encode_dir(o.in, profile_from_name(o.profile), o.beats);
        pieces = enc.pieces;
        for (const auto& [id, why] : enc.skipped) failures.push_back({id, why});
        inputs.insert(inputs.end(), enc.files.begin(), enc.files.end());
    } else {
        pieces = read_corpus(o.in);
        inputs.push_back(o.in);
        if (fs::exists(corpus_ids_path(o.in))) inputs.push_back(corpus_ids_path(o.in));
    }
    ScoreResult result;
    if (!pieces.empty()) result = score_eval_set(params, lr, pieces);
    result.errors.insert(result.errors.end(), failures.begin(), failures.end());
    std::stable_sort(result.errors.begin(), result.errors.end(),
                     [](const ScoreError& a, const ScoreError& b) { return a.id < b.id; });
    write_text_file(o.out, scores_csv(result));
    const std::string errors_path = o.out + ".errors.csv";
    std::string errors = "id,error\n";
    for (const auto& e : result.errors) errors += csv_field(e.id) + "," + csv_field(e.message) + "\n";
    write_text_file(errors_path, errors);

    Manifest m;
    m.command = "score";
    m.args = {"score", "--model", o.model_path, "--clf", o.clf_path, "--in", o.in, "--out", o.out,
              "--profile", o.profile, "--beats", std::to_string(o.beats)};
    m.parameters = {{"profile", o.profile}, {"beats_per_measure", o.beats}, {"hidden_dim", config.hidden_dim}};
    m.inputs = inputs;
    m.outputs = {o.out, errors_path};
    m.extra["scored"] = result.rows.size();
    m.extra["errors"] = result.errors.size();
    m.write(o.out);
    out << "scored " << result.rows.size() << " pieces, " << result.errors.size() << " errors\n";
    return exit_ok;
}

int cmd_replay(const Options& o, std::ostream& out, std::ostream& err) {
    json manifest;
    try {
        manifest = json::parse(read_text_file(o.manifest));
    } catch (const json::exception& e) {
        throw FormatError(o.manifest + ": " + e.what());
    }
    const auto args = manifest.at("args").get<std::vector<std::string>>();
    if (args.empty() || args.front() == "replay") throw FormatError("manifest has no replayable command");
    const int code = run_cli(args, out, err);
    if (code != exit_ok) return code;
    bool same = true;
    for (const auto& entry : manifest.at("outputs")) {
        const std::string path = entry.at("path").get<std::string>();
        const std::string expected = entry.at("fnv1a").get<std::string>();
        const std::string actual = file_digest(path);
        out << (actual == expected ? "same    " : "CHANGED ") << actual << "  " << path << "\n";
        same = same && actual == expected;
    }
    return same ? exit_ok : exit_replay_mismatch;
}

} // namespace

std::string manifest_path(const std::string& primary_output) { return primary_output + ".manifest.json"; }

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Classify monophonic MIDI melodies as AI-generated or composer-written", "midicls"};
    app.footer(kExitCodeHelp);
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    Options o;
    const auto seed_opt = [&](CLI::App* c) {
        c->add_option("--seed", o.seed, "seed for every random draw")->capture_default_str();
    };
    const auto profile_opt = [&](CLI::App* c) {
        c->add_option("--profile", o.profile, "token profile")
            ->check(CLI::IsMember({"figure", "timestep"}))
            ->capture_default_str();
        c->add_option("--beats", o.beats, "beats per measure")->check(CLI::PositiveNumber)->capture_default_str();
    };

    auto* synth = app.add_subcommand("synth-corpus", "write a synthetic two-class token corpus");
    synth->add_option("--out", o.out, "output directory")->required();
    synth->add_option("--n", o.n_per_class, "pieces per class")->capture_default_str();
    seed_opt(synth);
    synth->add_option("--profile", o.profile, "token profile")
        ->check(CLI::IsMember({"figure", "timestep"}))
        ->capture_default_str();

    auto* enc = app.add_subcommand("encode", "encode a directory of .mid files into a token corpus");
    enc->add_option("--in", o.in, "input directory")->required();
    enc->add_option("--out", o.out, "output corpus file")->required();
    profile_opt(enc);

    auto* aug = app.add_subcommand("augment", "add transposed and tempo-shifted copies");
    aug->add_option("--in", o.in, "input corpus")->required();
    aug->add_option("--out", o.out, "output corpus")->required();
    aug->add_option("--transpose", o.transpose, "comma-separated semitone offsets")->capture_default_str();
    aug->add_option("--tempo", o.tempo, "comma-separated tempo factors")->capture_default_str();
    profile_opt(aug);

    auto* tlm = app.add_subcommand("train-lm", "train the next-token language model");
    tlm->add_option("--in", o.ins, "input corpus (repeatable)")->required();
    tlm->add_option("--out", o.out, "output model file")->required();
    tlm->add_option("--embed", o.model.embed_dim, "embedding size")->capture_default_str();
    tlm->add_option("--hidden", o.model.hidden_dim, "recurrent state size")->capture_default_str();
    tlm->add_option("--epochs", o.model.epochs, "training epochs")->capture_default_str();
    tlm->add_option("--lr", o.model.learning_rate, "Adam learning rate")->capture_default_str();
    tlm->add_option("--beta1", o.model.adam_beta1)->capture_default_str();
    tlm->add_option("--beta2", o.model.adam_beta2)->capture_default_str();
    tlm->add_option("--eps", o.model.adam_epsilon)->capture_default_str();
    tlm->add_option("--bptt", o.model.bptt_len, "truncated backpropagation window")->capture_default_str();
    tlm->add_flag("--no-bias", o.no_bias, "hold gate and output biases at zero");
    seed_opt(tlm);

    auto* ext = app.add_subcommand("extract", "write final cell states as a feature CSV");
    ext->add_option("--model", o.model_path, "model file")->required();
    ext->add_option("--in", o.in, "input corpus")->required();
    ext->add_option("--out", o.out, "feature CSV")->required();

    auto* tclf = app.add_subcommand("train-clf", "fit logistic regression on labelled features");
    tclf->add_option("--ai", o.ai_path, "features of AI-generated pieces")->required();
    tclf->add_option("--composer", o.composer_path, "features of composer-written pieces")->required();
    tclf->add_option("--out", o.out, "classifier JSON")->required();
    add_lr_options(*tclf, o.lr);
    tclf->add_flag("--no-bias", o.no_bias, "fit without an intercept");

    auto* cv = app.add_subcommand("cross-validate", "k-fold cross validation of the classifier");
    cv->add_option("--ai", o.ai_path, "features of AI-generated pieces")->required();
    cv->add_option("--composer", o.composer_path, "features of composer-written pieces")->required();
    cv->add_option("--out", o.out, "text report (per-fold CSV goes to <out>.folds.csv)")->required();
    cv->add_option("--folds", o.folds, "fold count")->capture_default_str();
    add_lr_options(*cv, o.lr);
    cv->add_flag("--no-bias", o.no_bias, "fit without an intercept");
    cv->add_flag("--naive-folds", o.naive_folds, "fold items independently, ignoring augmentation groups");
    seed_opt(cv);

    auto* sc = app.add_subcommand("score", "probability that each piece is composer-written");
    sc->add_option("--model", o.model_path, "model file")->required();
    sc->add_option("--clf", o.clf_path, "classifier JSON")->required();
    sc->add_option("--in", o.in, "token corpus or directory of .mid files")->required();
    sc->add_option("--out", o.out, "scores CSV")->required();
    profile_opt(sc);

    auto* rep = app.add_subcommand("replay", "rerun a command from its manifest and compare outputs");
    rep->add_option("--manifest", o.manifest, "manifest JSON")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*synth) return cmd_synth(o, out);
        if (*enc) return cmd_encode(o, out);
        if (*aug) return cmd_augment(o, out);
        if (*tlm) return cmd_train_lm(o, out);
        if (*ext) return cmd_extract(o, out);
        if (*tclf) return cmd_train_clf(o, out);
        if (*cv) return cmd_cross_validate(o, out);
        if (*sc) return cmd_score(o, out);
        if (*rep) return cmd_replay(o, out, err);
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return static_cast<int>(e.category());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return exit_io;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_usage;
}

} // namespace midicls
