// net2adapt: train a sparse-autoencoder teacher, grow it into a student
// with function-preserving widen/deepen steps, fine-tune the student
// against a shifted domain with a class-wise MMD penalty, and evaluate.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "n2a/adapt.hpp"
#include "n2a/data.hpp"
#include "n2a/net2net.hpp"
#include "n2a/sae.hpp"

using namespace n2a;
using nlohmann::json;

namespace {

void write_text_atomic(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << text;
    if (!out) throw DataError("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

std::vector<std::size_t> parse_arch(const std::string& text) {
  std::vector<std::size_t> widths;
  std::stringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    try {
      std::size_t pos = 0;
      const long v = std::stol(tok, &pos);
      if (pos != tok.size() || v <= 0) throw std::invalid_argument(tok);
      widths.push_back(std::size_t(v));
    } catch (const std::exception&) {
      throw ConfigError("bad width '" + tok + "' in arch '" + text + "'");
    }
  }
  if (widths.empty()) throw ConfigError("empty arch");
  return widths;
}

struct DataOpts {
  std::string path;
  std::size_t segment_len = 0;  // 0: every row is already one sample
  std::string class_map_path;
  bool normalize = true;
};

void add_data_options(CLI::App* cmd, DataOpts& opts, const std::string& flag,
                      const std::string& what) {
  cmd->add_option(flag, opts.path, what)->required();
  cmd->add_option("--segment", opts.segment_len,
                  "segment rows into windows of this length (0 = rows are samples)");
  cmd->add_option("--class-map", opts.class_map_path,
                  "JSON file mapping label names to class ids");
  cmd->add_flag("--normalize,!--no-normalize", opts.normalize,
                "min-max normalize features (default on)");
}

TrainingSet load_dataset(const DataOpts& opts) {
  CsvSchema schema;
  if (!opts.class_map_path.empty()) {
    std::ifstream in(opts.class_map_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open class map: " + opts.class_map_path);
    json j;
    try {
      j = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ParseError("class map parse error at byte " + std::to_string(e.byte) + ": " +
                       e.what());
    }
    for (auto it = j.begin(); it != j.end(); ++it)
      schema.class_map[it.key()] = it.value().get<int>();
  }

  const auto series = load_timeseries_csv(opts.path, schema);
  if (series.empty()) throw DataError("dataset is empty: " + opts.path);
  if (opts.segment_len > 0) {
    TrainingSet ts = segment_all(series, opts.segment_len);
    if (ts.X.rows() == 0)
      throw DataError("segmentation produced no samples (segment length too long?)");
    return ts;
  }
  const std::size_t d = series.front().values.size();
  TrainingSet ts;
  ts.X = Matrix(series.size(), d);
  ts.y.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) {
    if (series[i].values.size() != d)
      throw DataError("row " + std::to_string(i + 1) + " has " +
                      std::to_string(series[i].values.size()) + " values, expected " +
                      std::to_string(d));
    double* dst = ts.X.row(i);
    for (std::size_t j = 0; j < d; ++j) dst[j] = series[i].values[j];
    ts.y.push_back(series[i].label);
  }
  return ts;
}

json metrics_to_json(const EvalMetrics& m) {
  return json{{"accuracy", m.accuracy},
              {"per_class_accuracy", m.per_class_accuracy},
              {"confusion", m.confusion}};
}

// --- synth -----------------------------------------------------------------

struct SynthArgs {
  SynthSpec spec;
  std::uint64_t seed = 0;
  std::string out_dir;
};

void cmd_synth(const SynthArgs& a) {
  const DomainPair pair = synth_domains(a.spec, a.seed);
  std::filesystem::create_directories(a.out_dir);
  const auto dir = std::filesystem::path(a.out_dir);
  save_samples_csv(pair.source, (dir / "source.csv").string());
  save_samples_csv(pair.target_train, (dir / "target_train.csv").string());
  save_samples_csv(pair.target_test, (dir / "target_test.csv").string());
  std::printf("wrote source.csv (%zu rows), target_train.csv (%zu rows), "
              "target_test.csv (%zu rows) to %s\n",
              pair.source.X.rows(), pair.target_train.X.rows(),
              pair.target_test.X.rows(), a.out_dir.c_str());
}

// --- train-teacher ----------------------------------------------------------

struct TeacherArgs {
  DataOpts data;
  std::string arch = "70,30,20";
  SaeHyperParams hp;
  std::size_t ft_epochs = 200;
  std::string ft_loss = "mse_softmax";
  double ft_learning_rate = -1.0;
  std::string activation = "sigmoid";
  std::uint64_t seed = 0;
  std::string out = "teacher.json";
  std::string log_path;
};

void cmd_train_teacher(const TeacherArgs& a) {
  if (a.activation != "sigmoid" && a.activation != "relu")
    throw ConfigError("--activation must be sigmoid or relu");
  TrainingSet ts = load_dataset(a.data);
  if (a.data.normalize) ts = minmax_normalize(ts);

  TrainLog ft_log;
  std::vector<TrainLog> pre_logs;
  const Network teacher =
      train_teacher(ts.X, ts.y, parse_arch(a.arch), a.hp, a.ft_epochs, a.seed,
                    class_loss_from_string(a.ft_loss), a.ft_learning_rate, &ft_log,
                    &pre_logs, activation_from_string(a.activation));

  save_model(teacher, a.out);
  if (!a.log_path.empty()) {
    std::string csv = "phase,epoch,loss\n";
    char buf[128];
    for (std::size_t l = 0; l < pre_logs.size(); ++l)
      for (std::size_t e = 0; e < pre_logs[l].loss.size(); ++e) {
        std::snprintf(buf, sizeof buf, "pretrain_%zu,%zu,%.17g\n", l + 1, e,
                      pre_logs[l].loss[e]);
        csv += buf;
      }
    for (std::size_t e = 0; e < ft_log.loss.size(); ++e) {
      std::snprintf(buf, sizeof buf, "finetune,%zu,%.17g\n", e, ft_log.loss[e]);
      csv += buf;
    }
    write_text_atomic(a.log_path, csv);
  }
  const EvalMetrics m = evaluate(teacher, ts.X, ts.y);
  std::printf("teacher written to %s\n", a.out.c_str());
  std::printf("final training accuracy: %.4f\n", m.accuracy);
}

// --- transform ----------------------------------------------------------------

struct TransformArgs {
  std::string teacher_path;
  std::string student_arch;
  std::string plan_path;
  std::string plan_out;
  std::string out = "student.json";
  double noise_eps = 0.0;
  std::uint64_t seed = 0;
  std::size_t probes = 100;
};

void cmd_transform(const TransformArgs& a) {
  const Network teacher = load_model(a.teacher_path);
  if (a.student_arch.empty() == a.plan_path.empty())
    throw ConfigError("give exactly one of --student-arch or --plan");

  const TransformPlan plan =
      a.plan_path.empty() ? plan_transform(teacher.hidden_widths(), parse_arch(a.student_arch))
                          : TransformPlan::load(a.plan_path);
  const Network student = apply_plan(teacher, plan, a.noise_eps, a.seed);

  // probe deviation on random inputs from the normalized data cube
  std::mt19937_64 gen(a.seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  Matrix X(a.probes, teacher.input_dim);
  for (double& v : X.values()) v = dist(gen);
  const ForwardTrace t_te = forward(teacher, X);
  const ForwardTrace t_st = forward(student, X);
  double dev = 0.0;
  for (std::size_t i = 0; i < t_te.probabilities.size(); ++i)
    dev = std::max(dev, std::abs(t_te.probabilities.data()[i] -
                                 t_st.probabilities.data()[i]));

  if (!a.plan_out.empty()) plan.save(a.plan_out);
  save_model(student, a.out);
  std::printf("student written to %s (hidden:", a.out.c_str());
  for (std::size_t w : student.hidden_widths()) std::printf(" %zu", w);
  std::printf(")\n");
  std::printf("max output deviation vs teacher over %zu probes: %.3e\n", a.probes, dev);
}

// --- adapt ----------------------------------------------------------------------

struct AdaptArgs {
  std::string student_path;
  DataOpts source, target_train, target_test;
  AdaptConfig cfg;
  double bandwidth = 0.0;  // 0: median heuristic on initial features
  std::string lr_rule = "bold_driver";
  std::string class_loss = "cross_entropy";
  std::string out = "adapted.json";
  std::string report_csv;
  std::string report_json;
  bool ablate = false;
};

json adapt_block(const AdaptReport& report, const EvalMetrics& test_metrics) {
  json j = metrics_to_json(test_metrics);
  j["train_metrics"] = metrics_to_json(report.final_metrics);
  j["initial_loss"] = {{"total", report.initial.loss_total},
                       {"class", report.initial.loss_class},
                       {"mmd", report.initial.loss_mmd}};
  const IterRecord& last = report.iters.back();
  j["final_loss"] = {{"total", last.loss_total},
                     {"class", last.loss_class},
                     {"mmd", last.loss_mmd}};
  j["bandwidth"] = report.kernel.bandwidth;
  j["iterations"] = report.iters.size();
  return j;
}

void cmd_adapt(const AdaptArgs& a) {
  const Network student = load_model(a.student_path);

  TrainingSet src = load_dataset(a.source);
  TrainingSet tgt_train = load_dataset(a.target_train);
  TrainingSet tgt_test = load_dataset(a.target_test);
  if (a.source.normalize) src = minmax_normalize(src);
  if (a.target_train.normalize) {
    tgt_train = minmax_normalize(tgt_train);
    tgt_test = apply_normalization(tgt_test, *tgt_train.normalization);
  }

  AdaptConfig cfg = a.cfg;
  cfg.lr_rule = lr_rule_from_string(a.lr_rule);
  cfg.class_loss = class_loss_from_string(a.class_loss);
  if (a.bandwidth > 0.0) cfg.kernel = KernelSpec{KernelFamily::Rbf, a.bandwidth};

  auto [adapted, report] =
      fine_tune(student, src.X, src.y, tgt_train.X, tgt_train.y, cfg);
  const EvalMetrics with_da = evaluate(adapted, tgt_test.X, tgt_test.y);

  json out_json;
  out_json["with_da"] = adapt_block(report, with_da);
  std::printf("target-test accuracy (with D.A.): %.4f\n", with_da.accuracy);

  if (a.ablate) {
    AdaptConfig cfg0 = cfg;
    cfg0.lambda_mmd = 0.0;
    auto [baseline, base_report] =
        fine_tune(student, src.X, src.y, tgt_train.X, tgt_train.y, cfg0);
    const EvalMetrics without_da = evaluate(baseline, tgt_test.X, tgt_test.y);
    out_json["without_da"] = adapt_block(base_report, without_da);
    std::printf("target-test accuracy (without D.A.): %.4f\n", without_da.accuracy);
  }

  save_model(adapted, a.out);
  if (!a.report_csv.empty()) report.save_csv(a.report_csv);
  if (!a.report_json.empty()) write_text_atomic(a.report_json, out_json.dump() + "\n");
  std::printf("adapted model written to %s\n", a.out.c_str());
}

// --- evaluate -----------------------------------------------------------------

struct EvaluateArgs {
  std::string model_path;
  DataOpts data;
  std::string norm_from;
  std::size_t cv = 0;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_evaluate(const EvaluateArgs& a) {
  const Network model = load_model(a.model_path);
  TrainingSet ds = load_dataset(a.data);
  if (a.data.normalize) {
    if (!a.norm_from.empty()) {
      DataOpts ref_opts = a.data;
      ref_opts.path = a.norm_from;
      const TrainingSet ref = minmax_normalize(load_dataset(ref_opts));
      ds = apply_normalization(ds, *ref.normalization);
    } else {
      ds = minmax_normalize(ds);
    }
  }
  if (ds.X.cols() != model.input_dim)
    throw ShapeError("dataset has " + std::to_string(ds.X.cols()) +
                     " features, model expects " + std::to_string(model.input_dim));

  json j = metrics_to_json(evaluate(model, ds.X, ds.y));
  j["n"] = ds.X.rows();

  if (a.cv > 0) {
    const auto folds = kfold_split(ds.X.rows(), a.cv, a.seed);
    std::vector<double> accs;
    for (const auto& [train_idx, test_idx] : folds) {
      Matrix Xf(test_idx.size(), ds.X.cols());
      std::vector<int> yf;
      yf.reserve(test_idx.size());
      for (std::size_t r = 0; r < test_idx.size(); ++r) {
        const double* src_row = ds.X.row(test_idx[r]);
        double* dst = Xf.row(r);
        for (std::size_t c = 0; c < ds.X.cols(); ++c) dst[c] = src_row[c];
        yf.push_back(ds.y[test_idx[r]]);
      }
      accs.push_back(evaluate(model, Xf, yf).accuracy);
    }
    double mean = 0.0;
    for (double acc : accs) mean += acc;
    mean /= double(accs.size());
    double var = 0.0;
    for (double acc : accs) var += (acc - mean) * (acc - mean);
    const double sd = accs.size() > 1 ? std::sqrt(var / double(accs.size() - 1)) : 0.0;
    j["cv"] = {{"folds", accs.size()}, {"fold_accuracies", accs}, {"mean", mean}, {"sd", sd}};
    std::printf("%zu-fold accuracy: %.4f +/- %.4f\n", accs.size(), mean, sd);
  }

  const std::string text = j.dump() + "\n";
  if (a.out.empty())
    std::fputs(text.c_str(), stdout);
  else
    write_text_atomic(a.out, text);
}

// --- wiring ---------------------------------------------------------------------

int run(std::vector<std::string> args) {
  CLI::App app{"teacher/student transfer-learning pipeline with Net2Net "
               "transformations and class-wise MMD adaptation"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  std::string config_path;  // consumed during argument assembly

  SynthArgs sy;
  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic domain-shift dataset");
  synth->add_option("--config", config_path, "JSON config file");
  synth->add_option("--out-dir", sy.out_dir, "output directory")->required();
  synth->add_option("--classes", sy.spec.C, "number of classes");
  synth->add_option("--dim", sy.spec.d, "samples per row (window length)");
  synth->add_option("--n-source", sy.spec.n_source, "source samples per class");
  synth->add_option("--n-target", sy.spec.n_target, "target samples per class per split");
  synth->add_option("--shift", sy.spec.shift, "domain shift strength");
  synth->add_option("--noise", sy.spec.noise, "additive noise level");
  synth->add_option("--seed", sy.seed, "random seed");

  TeacherArgs te;
  CLI::App* teach = app.add_subcommand("train-teacher",
                                       "greedy sparse-autoencoder pretraining + fine-tune");
  teach->add_option("--config", config_path, "JSON config file");
  add_data_options(teach, te.data, "--data", "source dataset CSV");
  teach->add_option("--arch", te.arch, "hidden layer widths, e.g. 70,30,20");
  teach->add_option("--lambda", te.hp.lambda_decay, "weight decay");
  teach->add_option("--rho", te.hp.rho, "sparsity target");
  teach->add_option("--beta", te.hp.beta, "sparsity penalty weight");
  teach->add_option("--epochs", te.hp.epochs, "pretraining epochs per autoencoder");
  teach->add_option("--learning-rate", te.hp.learning_rate, "gradient-descent step size");
  teach->add_option("--ft-epochs", te.ft_epochs, "supervised fine-tuning epochs");
  teach->add_option("--ft-loss", te.ft_loss, "fine-tune loss: mse_softmax|cross_entropy");
  teach->add_option("--ft-learning-rate", te.ft_learning_rate,
                    "fine-tune step size (<=0: reuse --learning-rate)");
  teach->add_option("--activation", te.activation,
                    "hidden activation: sigmoid|relu (relu keeps deepen exact)");
  teach->add_option("--seed", te.seed, "random seed");
  teach->add_option("--out", te.out, "teacher model file");
  teach->add_option("--log", te.log_path, "loss trajectory CSV");

  TransformArgs tr;
  CLI::App* trans = app.add_subcommand("transform",
                                       "grow a teacher into a student (widen/deepen)");
  trans->add_option("--config", config_path, "JSON config file");
  trans->add_option("--teacher", tr.teacher_path, "teacher model file")->required();
  trans->add_option("--student-arch", tr.student_arch, "student hidden widths");
  trans->add_option("--plan", tr.plan_path, "apply an existing plan JSON");
  trans->add_option("--plan-out", tr.plan_out, "write the transform plan here");
  trans->add_option("--out", tr.out, "student model file");
  trans->add_option("--noise-eps", tr.noise_eps, "symmetry-breaking noise on replicas");
  trans->add_option("--seed", tr.seed, "random seed");
  trans->add_option("--probes", tr.probes, "random probes for the deviation log");

  AdaptArgs ad;
  CLI::App* adapt_cmd = app.add_subcommand("adapt",
                                           "fine-tune a student with class-wise MMD");
  adapt_cmd->add_option("--config", config_path, "JSON config file");
  adapt_cmd->add_option("--student", ad.student_path, "student model file")->required();
  adapt_cmd->add_option("--source", ad.source.path, "source dataset CSV")->required();
  adapt_cmd->add_option("--target-train", ad.target_train.path,
                        "labeled target training CSV")->required();
  adapt_cmd->add_option("--target-test", ad.target_test.path, "target test CSV")->required();
  adapt_cmd->add_option("--segment", ad.source.segment_len,
                        "segment rows into windows (applies to all three sets)");
  adapt_cmd->add_option("--class-map", ad.source.class_map_path,
                        "JSON label-name map (applies to all three sets)");
  adapt_cmd->add_flag("--normalize,!--no-normalize", ad.source.normalize,
                      "min-max normalize features (default on)");
  adapt_cmd->add_option("--lambda-mmd", ad.cfg.lambda_mmd, "MMD trade-off weight");
  adapt_cmd->add_option("--iterations", ad.cfg.iterations, "training iterations");
  adapt_cmd->add_option("--eta0", ad.cfg.eta0, "initial learning rate");
  adapt_cmd->add_option("--lr-rule", ad.lr_rule, "bold_driver|fixed");
  adapt_cmd->add_option("--bandwidth", ad.bandwidth, "rbf bandwidth (0 = median heuristic)");
  adapt_cmd->add_option("--class-loss", ad.class_loss, "cross_entropy|mse_softmax");
  adapt_cmd->add_option("--seed", ad.cfg.seed, "random seed");
  adapt_cmd->add_option("--out", ad.out, "adapted model file");
  adapt_cmd->add_option("--report-csv", ad.report_csv, "per-iteration loss CSV");
  adapt_cmd->add_option("--report-json", ad.report_json, "metrics JSON");
  adapt_cmd->add_flag("--ablate", ad.ablate,
                      "also run with lambda=0 and report without_da metrics");

  EvaluateArgs ev;
  CLI::App* eval_cmd = app.add_subcommand("evaluate", "accuracy/confusion of a model");
  eval_cmd->add_option("--config", config_path, "JSON config file");
  eval_cmd->add_option("--model", ev.model_path, "model file")->required();
  add_data_options(eval_cmd, ev.data, "--data", "dataset CSV");
  eval_cmd->add_option("--norm-from", ev.norm_from,
                       "take normalization statistics from this CSV instead");
  eval_cmd->add_option("--cv", ev.cv, "report k-fold mean/sd of accuracy (0 = off)");
  eval_cmd->add_option("--seed", ev.seed, "fold shuffle seed");
  eval_cmd->add_option("--out", ev.out, "metrics JSON file (default: stdout)");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;  // usage problems count as config errors
  }

  if (*synth) cmd_synth(sy);
  if (*teach) cmd_train_teacher(te);
  if (*trans) cmd_transform(tr);
  if (*adapt_cmd) {
    // shared row-handling options fan out to the three datasets
    ad.target_train.segment_len = ad.target_test.segment_len = ad.source.segment_len;
    ad.target_train.class_map_path = ad.target_test.class_map_path = ad.source.class_map_path;
    ad.target_train.normalize = ad.target_test.normalize = ad.source.normalize;
    cmd_adapt(ad);
  }
  if (*eval_cmd) cmd_evaluate(ev);
  return 0;
}

// Build the effective argument list: [subcommand, config-derived options,
// user options]. TakeLast means explicit flags override config entries.
std::vector<std::string> assemble_args(int argc, char** argv) {
  std::vector<std::string> user(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i < user.size(); ++i) {
    if (user[i] == "--config" && i + 1 < user.size()) config_path = user[i + 1];
    else if (user[i].rfind("--config=", 0) == 0) config_path = user[i].substr(9);
  }
  if (config_path.empty() || user.empty() || user[0].rfind("-", 0) == 0) return user;

  std::ifstream in(config_path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + config_path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("config parse error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");

  std::vector<std::string> args{user[0]};
  for (auto it = j.begin(); it != j.end(); ++it) {
    std::string value;
    if (it.value().is_string())
      value = it.value().get<std::string>();
    else
      value = it.value().dump();
    args.push_back("--" + it.key() + "=" + value);
  }
  args.insert(args.end(), user.begin() + 1, user.end());
  return args;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(assemble_args(argc, argv));
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const TrainingError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const PlanError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const CoverageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const ShapeError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 5;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
