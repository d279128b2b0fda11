// dyadlss command-line front end.

#include "dyadlss/corpus.hpp"
#include "dyadlss/embeddings.hpp"
#include "dyadlss/error.hpp"
#include "dyadlss/lexicon.hpp"
#include "dyadlss/numfmt.hpp"
#include "dyadlss/pipeline.hpp"
#include "dyadlss/synthgen.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <iterator>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace dyadlss;

namespace {

std::ifstream open_in(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw DataError("cli", "cannot open " + p.string());
    return in;
}

std::ofstream open_out(const fs::path& p) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw DataError("cli", "cannot write " + p.string());
    return out;
}

std::string slurp(const fs::path& p) {
    auto in = open_in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

// ---------------------------------------------------------------------------
// shared option groups

struct CorpusArgs {
    std::string corpus;
    std::string transcripts;
    std::string format = "jsonl";
    std::string fillers;
    bool no_remerge = false;

    void add(CLI::App* app) {
        auto* c = app->add_option("--corpus", corpus, "Normalized corpus file written by 'ingest'");
        auto* t = app->add_option("--transcripts", transcripts, "Raw transcript file (merged on the fly)");
        c->excludes(t);
        app->add_option("--format", format, "Transcript format")
            ->check(CLI::IsMember({"jsonl", "csv"}))
            ->capture_default_str();
        app->add_option("--fillers", fillers, "Filler lexicon, one token per line (default: um uh mhm mm hmm)");
        app->add_flag("--no-remerge", no_remerge, "Do not re-merge same-speaker neighbours after dropping fillers");
    }

    corpus::BuildOptions build_options() const {
        corpus::BuildOptions o;
        if (!fillers.empty()) {
            auto in = open_in(fillers);
            o.fillers = corpus::read_filler_lexicon(in);
        }
        o.remerge = !no_remerge;
        return o;
    }

    corpus::Corpus load() const {
        if (!corpus.empty()) {
            auto in = open_in(corpus);
            return corpus::read_corpus(in);
        }
        if (transcripts.empty()) throw DataError("cli", "give --corpus or --transcripts");
        auto in = open_in(transcripts);
        const auto records = corpus::parse_transcript(in, *corpus::parse_format(format));
        return corpus::build_corpus(records, build_options());
    }
};

struct EmbeddingArgs {
    std::string file;
    bool test_provider = false;
    std::size_t dim = 64;
    std::uint64_t provider_seed = 0;

    void add(CLI::App* app) {
        auto* f = app->add_option("--embeddings", file, "Embeddings file (JSONL or binary)");
        auto* t = app->add_flag("--test-provider", test_provider,
                                "Embed turns with the deterministic hashing test provider");
        f->excludes(t);
        app->add_option("--dim", dim, "Test-provider dimension")->capture_default_str();
        app->add_option("--provider-seed", provider_seed, "Test-provider hash seed")->capture_default_str();
    }

    embeddings::EmbeddingSet load(const corpus::Corpus& c) const {
        if (test_provider) return embeddings::embed_with_test_provider(c, dim, provider_seed);
        if (file.empty()) throw DataError("cli", "give --embeddings or --test-provider");
        const auto keys = embeddings::corpus_keys(c);
        return embeddings::import_embeddings(file, keys);
    }
};

struct LexiconArgs {
    std::string dir;

    void add(CLI::App* app) {
        app->add_option("--lexicon-dir", dir,
                        "Directory of *.tsv lexicons (default: $DYADLSS_LEXICON_DIR, else the bundled lexicon)");
    }

    std::vector<lexicon::CategoryLexicon> load() const {
        return lexicon::load_lexicon_dir(dir.empty() ? lexicon::default_lexicon_dir() : fs::path(dir));
    }
};

struct ValidationArgs {
    std::string mode = "pooled";
    std::string held = "A";

    void add(CLI::App* app, pipeline::AnalysisConfig& c) {
        app->add_option("--seed", c.seed, "Seed for permutation streams")->capture_default_str();
        app->add_option("--replicates", c.replicates, "Permutation replicates R")->capture_default_str();
        app->add_option("--horizon", c.horizon, "Decay-curve horizon K")->capture_default_str();
        app->add_option("--permute,--permute-mode", mode, "Permutation scheme")
            ->check(CLI::IsMember({"pooled", "within-speaker"}))
            ->capture_default_str();
        app->add_flag("--smoothed", c.smoothed, "Report (1 + count) / (1 + R) instead of count / R");
        app->add_option("--held", held, "Speaker whose turns are kept in pseudo dyads")
            ->check(CLI::IsMember({"A", "B"}))
            ->capture_default_str();
        app->add_option("--partner-offset", c.partner_offset, "Leading partner turns skipped in pseudo dyads")
            ->capture_default_str();
    }

    void apply(pipeline::AnalysisConfig& c) const {
        c.permute_mode = *validation::parse_permute_mode(mode);
        c.held = *parse_speaker(held);
    }
};

struct ModelArgs {
    std::string method = "reml";
    std::string dof = "satterthwaite";
    std::string grouping = "couple";
    std::vector<std::string> models;

    void add(CLI::App* app, pipeline::AnalysisConfig& c) {
        app->add_option("--method", method, "Variance-component estimation")
            ->check(CLI::IsMember({"reml", "ml"}))
            ->capture_default_str();
        app->add_option("--dof", dof, "Denominator df for fixed effects")
            ->check(CLI::IsMember({"satterthwaite", "residual"}))
            ->capture_default_str();
        app->add_option("--grouping", grouping, "Random-intercept grouping factor")
            ->check(CLI::IsMember({"couple", "couple-kind"}))
            ->capture_default_str();
        app->add_option("--alpha", c.alpha, "Interaction threshold before simple slopes")->capture_default_str();
        app->add_option("--models", models, "Model sets to fit (default: base a b c d e all)")
            ->check(CLI::IsMember({"base", "a", "b", "c", "d", "e", "all"}));
    }

    void apply(pipeline::AnalysisConfig& c) const {
        c.method = *lmm::parse_fit_method(method);
        c.dof = *lmm::parse_dof_method(dof);
        c.grouping = *analysis::parse_grouping(grouping);
        if (!models.empty()) c.model_sets = models;
    }
};

void print_corpus_summary(const corpus::Corpus& c) {
    std::set<std::string> couples;
    std::map<Kind, std::size_t> kinds;
    std::size_t dropped = 0;
    for (const auto& conv : c.conversations) {
        couples.insert(conv.couple_id);
        ++kinds[conv.kind];
        dropped += conv.dropped_filler_turns;
    }
    std::cout << "couples: " << couples.size() << "\n"
              << "conversations: " << c.conversations.size() << " (pleasant " << kinds[Kind::pleasant]
              << ", conflict " << kinds[Kind::conflict] << ")\n"
              << "turns: " << c.turn_count() << "\n"
              << "dropped filler turns: " << dropped << "\n";
    for (const auto& conv : c.conversations) {
        if (!conv.usable()) warn("(" + conv.couple_id + ", " + std::string(to_string(conv.kind)) + ") has no usable turns");
    }
}

std::optional<std::vector<corpus::ParticipantRating>> load_ratings(const std::string& path) {
    if (path.empty()) {
        warn("no ratings file given; running in similarity-only mode");
        return std::nullopt;
    }
    auto in = open_in(path);
    return corpus::parse_ratings(in);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dyadlss: latent semantic similarity for dyadic conversations"};
    app.require_subcommand(1);
    int jobs = 0;
    app.add_option("--jobs,-j", jobs, "Worker threads (0 = runtime default); results do not depend on it")
        ->capture_default_str();

    pipeline::AnalysisConfig config;

    // ingest
    auto* ingest = app.add_subcommand("ingest", "Parse transcripts into the normalized corpus file");
    CorpusArgs ingest_corpus;
    std::string ingest_ratings, ingest_out;
    ingest_corpus.add(ingest);
    ingest->add_option("--ratings", ingest_ratings, "Ratings CSV to validate alongside");
    ingest->add_option("--out", ingest_out, "Normalized corpus output (JSONL)")->required();

    // embed-import
    auto* embed = app.add_subcommand("embed-import", "Check an embeddings file against the corpus, or create one");
    CorpusArgs embed_corpus;
    EmbeddingArgs embed_args;
    std::string embed_out, embed_format = "jsonl";
    embed_corpus.add(embed);
    embed_args.add(embed);
    embed->add_option("--out", embed_out, "Write the accepted embeddings here");
    embed->add_option("--out-format", embed_format, "Output format")
        ->check(CLI::IsMember({"jsonl", "binary"}))
        ->capture_default_str();

    // lss
    auto* lss = app.add_subcommand("lss", "Compute pairwise and overall LSS per conversation");
    CorpusArgs lss_corpus;
    EmbeddingArgs lss_emb;
    std::string lss_out, dump_turns;
    lss_corpus.add(lss);
    lss_emb.add(lss);
    lss->add_option("--out", lss_out, "Output directory for similarity.csv and pairwise.csv");
    lss->add_option("--dump-turns", dump_turns, "Write the post-merge turns (JSONL) for external embedders");
    lss->add_option("--seed", config.seed, "Seed recorded in output headers")->capture_default_str();

    // validate
    auto* validate = app.add_subcommand("validate", "Decay curves, turn-order permutation and pseudo-dyad tests");
    CorpusArgs val_corpus;
    EmbeddingArgs val_emb;
    ValidationArgs val_args;
    std::string val_out;
    val_corpus.add(validate);
    val_emb.add(validate);
    val_args.add(validate, config);
    validate->add_option("--out", val_out, "Output directory")->required();

    // match
    auto* match = app.add_subcommand("match", "Word-category counts and style matching");
    CorpusArgs match_corpus;
    LexiconArgs match_lex;
    std::string match_out;
    bool raw_counts = false;
    match_corpus.add(match);
    match_lex.add(match);
    match->add_flag("--raw-counts", raw_counts, "Match on raw category counts instead of percentages");
    match->add_option("--out", match_out, "Output directory")->required();

    // analyze
    auto* analyze = app.add_subcommand("analyze", "Full pipeline and the seven model reports");
    CorpusArgs an_corpus;
    EmbeddingArgs an_emb;
    LexiconArgs an_lex;
    ValidationArgs an_val;
    ModelArgs an_model;
    std::string an_ratings, an_out;
    bool an_raw_counts = false;
    an_corpus.add(analyze);
    an_emb.add(analyze);
    an_lex.add(analyze);
    an_val.add(analyze, config);
    an_model.add(analyze, config);
    analyze->add_option("--ratings", an_ratings, "Ratings CSV (without it only similarity and validation run)");
    analyze->add_flag("--raw-counts", an_raw_counts, "Match on raw category counts instead of percentages");
    analyze->add_option("--out", an_out, "Output directory for the report bundle")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus with planted effects");
    std::string synth_config, synth_preset, synth_out, synth_format = "jsonl";
    std::optional<std::uint64_t> synth_seed;
    auto* sc = synth->add_option("--config", synth_config, "Generator config (JSON)");
    auto* sp = synth->add_option("--preset", synth_preset, "Named config")->check(
        CLI::IsMember(synthgen::preset_names()));
    sc->excludes(sp);
    synth->add_option("--seed", synth_seed, "Override the config seed");
    synth->add_option("--out", synth_out, "Output directory")->required();
    synth->add_option("--embeddings-format", synth_format, "Embeddings file format")
        ->check(CLI::IsMember({"jsonl", "binary"}))
        ->capture_default_str();

    // report
    auto* report = app.add_subcommand("report", "Verify a report bundle against its MANIFEST and print the summary");
    std::string report_dir;
    report->add_option("--dir", report_dir, "Bundle directory written by 'analyze'")->required();

    CLI11_PARSE(app, argc, argv);
    config.jobs = jobs;

    try {
        if (ingest->parsed()) {
            const auto c = ingest_corpus.load();
            auto out = open_out(ingest_out);
            corpus::write_corpus(out, c);
            print_corpus_summary(c);
            if (auto r = load_ratings(ingest_ratings)) std::cout << "ratings: " << r->size() << " rows\n";
        } else if (embed->parsed()) {
            const auto c = embed_corpus.load();
            const auto set = embed_args.load(c);
            std::cout << "embeddings: " << set.size() << " turns, dimension " << set.dim() << ", "
                      << embeddings::to_string(set.provenance()) << "\n";
            if (!embed_out.empty()) {
                embeddings::write_embeddings(embed_out, set,
                                             embed_format == "binary" ? embeddings::FileFormat::binary
                                                                      : embeddings::FileFormat::jsonl);
            }
        } else if (lss->parsed()) {
            const auto c = lss_corpus.load();
            if (!dump_turns.empty()) {
                auto out = open_out(dump_turns);
                corpus::write_corpus(out, c);
            }
            if (!lss_out.empty()) {
                const auto set = lss_emb.load(c);
                pipeline::Inputs in{&c, &set, nullptr, {}};
                pipeline::write_bundle(lss_out, pipeline::similarity_stage(in, config));
            } else if (dump_turns.empty()) {
                throw DataError("cli", "nothing to do: give --out and/or --dump-turns");
            }
        } else if (validate->parsed()) {
            val_args.apply(config);
            const auto c = val_corpus.load();
            const auto set = val_emb.load(c);
            pipeline::Inputs in{&c, &set, nullptr, {}};
            pipeline::write_bundle(val_out, pipeline::validation_stage(in, config));
        } else if (match->parsed()) {
            config.match_input = raw_counts ? lexicon::MatchInput::raw_counts : lexicon::MatchInput::percent;
            const auto c = match_corpus.load();
            const auto lex = match_lex.load();
            pipeline::Inputs in{&c, nullptr, nullptr, lex};
            pipeline::write_bundle(match_out, pipeline::matching_stage(in, config));
        } else if (analyze->parsed()) {
            an_val.apply(config);
            an_model.apply(config);
            config.match_input = an_raw_counts ? lexicon::MatchInput::raw_counts : lexicon::MatchInput::percent;
            const auto c = an_corpus.load();
            const auto set = an_emb.load(c);
            const auto lex = an_lex.load();
            const auto ratings = load_ratings(an_ratings);
            pipeline::Inputs in{&c, &set, ratings ? &*ratings : nullptr, lex};
            const auto bundle = pipeline::analyze(in, config);
            pipeline::write_bundle(an_out, bundle);
            std::cout << bundle.at("report.txt");
        } else if (synth->parsed()) {
            synthgen::SynthConfig sc_value;
            if (!synth_config.empty()) {
                sc_value = synthgen::config_from_json(slurp(synth_config));
            } else if (!synth_preset.empty()) {
                sc_value = *synthgen::preset(synth_preset);
            }
            if (synth_seed) sc_value.seed = *synth_seed;
            const auto corpus = synthgen::generate_corpus(sc_value, jobs);
            const fs::path dir(synth_out);
            fs::create_directories(dir);
            {
                auto out = open_out(dir / "transcripts.jsonl");
                corpus::write_transcript(out, corpus.transcript, corpus::TranscriptFormat::jsonl);
            }
            const bool binary = synth_format == "binary";
            embeddings::write_embeddings(dir / (binary ? "embeddings.bin" : "embeddings.jsonl"), corpus.embeddings,
                                         binary ? embeddings::FileFormat::binary : embeddings::FileFormat::jsonl);
            {
                auto out = open_out(dir / "ratings.csv");
                corpus::write_ratings(out, corpus.ratings);
            }
            {
                auto out = open_out(dir / "truth.csv");
                out << "couple_id,kind,rho,turns,overall\n";
                for (const auto& t : corpus.truth) {
                    out << t.couple_id << "," << to_string(t.kind) << "," << format_number(t.rho) << "," << t.turns
                        << "," << format_number(t.overall) << "\n";
                }
            }
            {
                auto out = open_out(dir / "synth_config.json");
                out << synthgen::config_to_json(sc_value);
            }
            std::cout << "synthetic corpus: " << sc_value.couples << " couples, " << corpus.embeddings.size()
                      << " turns -> " << dir.string() << "\n";
        } else if (report->parsed()) {
            const auto bundle = pipeline::read_bundle(report_dir);
            pipeline::verify_manifest(bundle);
            std::cout << pipeline::render_report(bundle);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
