// Command-line front end: mine-sites, train, generate, verify,
// export-embeddings and init-checkpoint.

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "enzygen/checkpoint.hpp"
#include "enzygen/data.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/generate.hpp"
#include "enzygen/run_config.hpp"
#include "enzygen/site_miner.hpp"
#include "enzygen/training.hpp"
#include "enzygen/verify.hpp"

namespace fs = std::filesystem;
using namespace enzygen;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

// Keeps only the first `keep` lines of a loss log (used when resuming).
void truncate_log(const fs::path& path, std::size_t keep) {
  std::vector<std::string> lines;
  if (fs::exists(path)) {
    std::ifstream in(path);
    std::string line;
    while (lines.size() < keep && std::getline(in, line)) lines.push_back(line);
  }
  std::ofstream out(path, std::ios::trunc);
  for (const auto& l : lines) out << l << '\n';
}

int cmd_mine_sites(const fs::path& dir, double tau, const fs::path& out_path) {
  if (!(tau > 0.0 && tau <= 1.0)) {
    std::cerr << "error: --tau must lie in (0, 1], got " << tau << '\n';
    return kUsage;
  }
  if (!fs::is_directory(dir)) {
    std::cerr << "error: --alignments: not a directory: " << dir << '\n';
    return kUsage;
  }
  std::vector<SiteAnnotation> all;
  int failures = 0;
  for (const auto& file : alignment_files(dir)) {
    try {
      const auto sites = mine_sites(read_aligned_fasta(file), tau);
      all.insert(all.end(), sites.begin(), sites.end());
    } catch (const Error& e) {
      std::cerr << "error: " << e.what() << '\n';
      ++failures;
    }
  }
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << '\n';
    return kUsage;
  }
  write_site_manifest(out, all);
  std::cout << "wrote " << all.size() << " site annotations to " << out_path.string() << '\n';
  return failures == 0 ? kOk : kFailure;
}

int cmd_train(const fs::path& config_path, bool pretrain_mlm, const fs::path& ckpt_override,
              const fs::path& log_override) {
  RunConfig cfg;
  try {
    cfg = load_run_config(config_path);
    if (!ckpt_override.empty()) cfg.checkpoint = ckpt_override;
    if (!log_override.empty()) cfg.loss_log = log_override;
    validate_paths(cfg);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  }

  Dataset data;
  try {
    data = build_dataset(cfg);
  } catch (const Error& e) {
    std::cerr << "dataset assembly failed: " << e.what() << '\n';
    return kFailure;
  }
  std::cout << "dataset: " << data.train.size() << " train, " << data.valid.size() << " valid, " << data.test.size()
            << " test, " << data.substrates.size() << " substrates\n";

  Checkpoint ckpt;
  if (cfg.resume && fs::exists(cfg.checkpoint)) {
    ckpt = load_checkpoint(cfg.checkpoint);
    ModelConfig expected = cfg.model;
    expected.tag_vocab = ckpt.config.tag_vocab;
    if (!(expected == ckpt.config)) {
      std::cerr << "config error: checkpoint model settings differ from " << config_path << '\n';
      return kUsage;
    }
    if (!(ckpt.tree == data.tree)) {
      std::cerr << "dataset assembly failed: EC vocabulary differs from the checkpoint\n";
      return kFailure;
    }
    std::cout << "resuming at step " << ckpt.step << " (pretraining step " << ckpt.mlm_step << ")\n";
  } else {
    ckpt = fresh_checkpoint(cfg.model, data.tree, cfg.schedule.seed);
  }

  fs::path mlm_log = cfg.loss_log;
  mlm_log += ".mlm";
  truncate_log(cfg.loss_log, ckpt.step);
  if (pretrain_mlm) truncate_log(mlm_log, ckpt.mlm_step);

  auto saver = [&](const Checkpoint& c) { save_checkpoint(cfg.checkpoint, c); };
  const auto started = std::chrono::steady_clock::now();
  try {
    if (pretrain_mlm) {
      std::ofstream log(mlm_log, std::ios::app);
      mlm_pretrain(data, ckpt, cfg.schedule, {[&](const std::string& l) { log << l << '\n' << std::flush; }, saver});
    }
    std::ofstream log(cfg.loss_log, std::ios::app);
    train(data, ckpt, cfg.schedule, {[&](const std::string& l) { log << l << '\n' << std::flush; }, saver});
  } catch (const TrainingDiverged& e) {
    std::cerr << "error: " << e.what() << "; last good checkpoint kept at " << cfg.checkpoint << '\n';
    return kFailure;
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  const auto report = evaluate_recovery(ckpt.params, ckpt.config, data.train, cfg.schedule.seed);
  std::printf("trained %zu steps in %.1f s\n", ckpt.step, seconds);
  std::printf("train seq_nll/residue %.6f, greedy recovery %.4f over %zu free residues\n",
              report.seq_nll_per_residue, report.recovery, report.free_residues);
  return kOk;
}

int cmd_generate(const fs::path& ckpt_path, const fs::path& motif_path, const std::string& tag,
                 const fs::path& out_path, std::size_t count, std::uint64_t seed) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  MotifSpec motif = parse_motif(motif_path);
  if (!tag.empty()) motif.ec = tag;
  const auto candidates = generate_candidates(ckpt, motif, count, seed);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << '\n';
    return kUsage;
  }
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const std::string id = "candidate_" + std::to_string(k);
    write_tsv(out, {id, candidates[k].sequence, candidates[k].coords});
    std::cout << '>' << id << " seed=" << candidates[k].seed << " tag=" << motif.ec << '\n'
              << candidates[k].sequence << '\n';
  }
  return kOk;
}

int cmd_verify(const fs::path& ckpt_path, const std::string& suite, std::size_t cases) {
  Checkpoint ckpt = load_checkpoint(ckpt_path);
  bool ok = true;
  if (suite == "equivariance" || suite == "all") {
    const double tol = 1e-9;
    for (std::size_t length : {std::size_t{5}, std::size_t{30}}) {
      const std::size_t n = std::min(length, ckpt.config.max_len);
      const auto r = check_equivariance(ckpt.params, ckpt.config, n, cases, ckpt.seed + n);
      std::printf(
          "equivariance N=%zu cases=%zu: features %.3e, logits %.3e, coords %.3e, substrate %.3e, binding %.3e\n", n,
          r.cases, r.max_feature_dev, r.max_logit_dev, r.max_coord_dev, r.max_substrate_dev, r.max_binding_dev);
      if (!r.within(tol)) {
        std::printf("FAIL %s exceeds %.0e\n", r.worst().c_str(), tol);
        ok = false;
      }
    }
  }
  if (suite == "gradients" || suite == "all") {
    const double tol = 1e-5;
    const auto r = check_gradients(ckpt.params, ckpt.config, 6, 5, ckpt.seed);
    std::printf("gradients: %zu tensors, %zu coordinates, max relative error %.3e (%s)\n", r.tensors, r.coordinates,
                r.max_rel_error, r.worst_tensor.c_str());
    if (!(r.max_rel_error < tol)) {
      std::printf("FAIL gradient check exceeds %.0e at %s\n", tol, r.worst_tensor.c_str());
      ok = false;
    }
  }
  std::printf("%s\n", ok ? "PASS" : "FAIL");
  return ok ? kOk : kFailure;
}

int cmd_export(const fs::path& ckpt_path, const fs::path& out_path) {
  const Checkpoint ckpt = load_checkpoint(ckpt_path);
  std::ofstream out(out_path);
  if (!out) {
    std::cerr << "error: cannot write " << out_path << '\n';
    return kUsage;
  }
  const auto rows = tag_embeddings(ckpt);
  write_tag_embeddings(out, rows);
  std::cout << "wrote " << rows.size() << " tag embeddings to " << out_path.string() << '\n';
  return kOk;
}

int cmd_init(const fs::path& config_path, const std::vector<std::string>& tags, const fs::path& out_path) {
  const RunConfig cfg = load_run_config(config_path);
  ECTree tree;
  for (const auto& t : tags) tree.add(t);
  if (tags.empty()) tree.add("1.1.1.1");
  save_checkpoint(out_path, fresh_checkpoint(cfg.model, tree, cfg.schedule.seed));
  std::cout << "wrote fresh checkpoint to " << out_path.string() << '\n';
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EnzyGen: enzyme sequence and structure co-design"};
  app.require_subcommand(1);

  auto* mine = app.add_subcommand("mine-sites", "Mine conserved sites from aligned FASTA families");
  fs::path align_dir, sites_out;
  double tau = kDefaultTau;
  mine->add_option("--alignments", align_dir, "Directory of aligned FASTA files, one family each")->required();
  mine->add_option("--tau", tau, "Conservation threshold in (0, 1]")->capture_default_str();
  mine->add_option("--out", sites_out, "Site manifest to write")->required();

  auto* train_cmd = app.add_subcommand("train", "Train (and optionally pretrain) from a config file");
  fs::path config_path;
  bool pretrain = false;
  train_cmd->add_option("--config", config_path, "Run config (key = value)")->required();
  train_cmd->add_flag("--pretrain-mlm", pretrain, "Run masked-LM pretraining first");
  fs::path train_ckpt, train_log;
  train_cmd->add_option("--checkpoint", train_ckpt, "Override the config's checkpoint path");
  train_cmd->add_option("--loss-log", train_log, "Override the config's loss log path");

  auto* gen = app.add_subcommand("generate", "Design sequences and structures for a motif");
  fs::path ckpt_path, motif_path, out_path;
  std::string tag;
  std::size_t count = 1;
  std::uint64_t seed = 0;
  gen->add_option("--checkpoint", ckpt_path, "Trained checkpoint")->required();
  gen->add_option("--motif", motif_path, "Motif file")->required();
  gen->add_option("--tag", tag, "EC number (defaults to the motif file's tag)");
  gen->add_option("--out", out_path, "Output TSV of candidate Cα traces")->required();
  gen->add_option("--num-candidates", count, "Number of candidates")->capture_default_str()->check(CLI::PositiveNumber);
  gen->add_option("--seed", seed, "Seed for coordinate initialisation")->capture_default_str();

  auto* ver = app.add_subcommand("verify", "Run the equivariance and gradient property suites");
  std::string suite = "all";
  std::size_t cases = 10;
  ver->add_option("--checkpoint", ckpt_path, "Checkpoint to audit")->required();
  ver->add_option("--suite", suite, "equivariance, gradients or all")
      ->capture_default_str()
      ->check(CLI::IsMember({"equivariance", "gradients", "all"}));
  ver->add_option("--cases", cases, "Random cases per sequence length")->capture_default_str();

  auto* exp = app.add_subcommand("export-embeddings", "Write every EC tag embedding");
  exp->add_option("--checkpoint", ckpt_path, "Checkpoint")->required();
  exp->add_option("--out", out_path, "Output file")->required();

  auto* init = app.add_subcommand("init-checkpoint", "Write a randomly initialised checkpoint");
  std::vector<std::string> tags;
  init->add_option("--config", config_path, "Run config providing the model settings")->required();
  init->add_option("--tags", tags, "EC numbers for the tag vocabulary")->delimiter(',');
  init->add_option("--out", out_path, "Checkpoint to write")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*mine) return cmd_mine_sites(align_dir, tau, sites_out);
    if (*train_cmd) return cmd_train(config_path, pretrain, train_ckpt, train_log);
    if (*gen) return cmd_generate(ckpt_path, motif_path, tag, out_path, count, seed);
    if (*ver) return cmd_verify(ckpt_path, suite, cases);
    if (*exp) return cmd_export(ckpt_path, out_path);
    if (*init) return cmd_init(config_path, tags, out_path);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsage;
  } catch (const ParseError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return kUsage;
  } catch (const VocabularyError& e) {
    std::cerr << "vocabulary error: " << e.what() << '\n';
    return kUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kUsage;
}
