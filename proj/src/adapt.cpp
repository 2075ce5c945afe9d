#include "n2a/adapt.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace n2a {

namespace {

constexpr double kEtaUnderflow = 1e-12;

std::vector<std::vector<std::size_t>> class_index_lists(const std::vector<int>& y, int C) {
  std::vector<std::vector<std::size_t>> idx;
  idx.resize(std::size_t(C));
  for (std::size_t i = 0; i < y.size(); ++i) idx[std::size_t(y[i])].push_back(i);
  return idx;
}

Matrix gather_rows(const Matrix& F, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), F.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* src = F.row(rows[r]);
    double* dst = out.row(r);
    for (std::size_t j = 0; j < F.cols(); ++j) dst[j] = src[j];
  }
  return out;
}

void scatter_add_rows(const Matrix& part, const std::vector<std::size_t>& rows, Matrix& full) {
  const auto& k = kernels::active();
  for (std::size_t r = 0; r < rows.size(); ++r)
    k.axpy(1.0, part.row(r), full.row(rows[r]), full.cols());
}

KernelSpec resolve_kernel(const AdaptConfig& cfg, const Matrix& Fs, const Matrix& Ft) {
  if (cfg.kernel) {
    cfg.kernel->validate();
    return *cfg.kernel;
  }
  KernelSpec k;
  k.family = KernelFamily::Rbf;
  k.bandwidth = median_bandwidth(Fs, Ft);
  return k;
}

}  // namespace

const char* to_string(LrRule r) { return r == LrRule::BoldDriver ? "bold_driver" : "fixed"; }

LrRule lr_rule_from_string(const std::string& s) {
  if (s == "bold_driver") return LrRule::BoldDriver;
  if (s == "fixed") return LrRule::Fixed;
  throw ConfigError("unknown learning-rate rule: " + s);
}

void AdaptConfig::validate() const {
  if (iterations < 1) throw ConfigError("iterations must be >= 1");
  if (!(eta0 > 0.0)) throw ConfigError("eta0 must be > 0");
  if (lambda_mmd < 0.0) throw ConfigError("lambda_mmd must be >= 0");
  if (kernel) kernel->validate();
}

double cross_entropy_loss(const ForwardTrace& trace, const std::vector<int>& y) {
  return cross_entropy_mean(trace.probabilities, y);
}

namespace {

struct JointEval {
  JointLoss loss;
  ForwardTrace trace_s;
  ForwardTrace trace_t;
  KernelSpec kernel;
};

JointEval joint_eval(const Network& net, const Matrix& Xs, const std::vector<int>& ys,
                     const Matrix& Xt, const std::vector<int>& yt, const AdaptConfig& cfg) {
  cfg.validate();
  if (Xs.cols() != Xt.cols())
    throw ShapeError("joint objective: source and target feature dimensions differ");
  const int C = int(net.classes());
  check_labels(ys, Xs.rows(), std::size_t(C));
  check_labels(yt, Xt.rows(), std::size_t(C));

  JointEval ev;
  ev.trace_s = forward(net, Xs);
  ev.trace_t = forward(net, Xt);
  ev.kernel = resolve_kernel(cfg, ev.trace_s.features(), ev.trace_t.features());
  ev.loss.class_term = cfg.class_loss == ClassLoss::CrossEntropy
                           ? cross_entropy_mean(ev.trace_s.probabilities, ys)
                           : mse_softmax_mean(ev.trace_s.probabilities, ys);
  ev.loss.mmd_term =
      classwise_mmd2(ev.trace_s.features(), ys, ev.trace_t.features(), yt, C, ev.kernel);
  ev.loss.total = ev.loss.class_term + cfg.lambda_mmd * ev.loss.mmd_term;
  return ev;
}

}  // namespace

JointLoss joint_loss(const Network& net, const Matrix& Xs, const std::vector<int>& ys,
                     const Matrix& Xt, const std::vector<int>& yt, const AdaptConfig& cfg) {
  return joint_eval(net, Xs, ys, Xt, yt, cfg).loss;
}

NetGrads joint_grad(const Network& net, const Matrix& Xs, const std::vector<int>& ys,
                    const Matrix& Xt, const std::vector<int>& yt, const AdaptConfig& cfg) {
  JointEval ev = joint_eval(net, Xs, ys, Xt, yt, cfg);
  const int C = int(net.classes());

  NetGrads grads = NetGrads::zeros_like(net);
  Matrix d_logits = class_loss_dlogits(cfg.class_loss, ev.trace_s.probabilities, ys);

  if (cfg.lambda_mmd != 0.0) {
    const Matrix& Fs = ev.trace_s.features();
    const Matrix& Ft = ev.trace_t.features();
    Matrix dFs(Fs.rows(), Fs.cols());
    Matrix dFt(Ft.rows(), Ft.cols());
    const auto src_idx = class_index_lists(ys, C);
    const auto tgt_idx = class_index_lists(yt, C);
    for (int c = 0; c < C; ++c) {
      const Matrix fs_c = gather_rows(Fs, src_idx[std::size_t(c)]);
      const Matrix ft_c = gather_rows(Ft, tgt_idx[std::size_t(c)]);
      Matrix dfs_c(fs_c.rows(), fs_c.cols());
      Matrix dft_c(ft_c.rows(), ft_c.cols());
      mmd2_biased_grad(fs_c, ft_c, ev.kernel, cfg.lambda_mmd, dfs_c, dft_c);
      scatter_add_rows(dfs_c, src_idx[std::size_t(c)], dFs);
      scatter_add_rows(dft_c, tgt_idx[std::size_t(c)], dFt);
    }
    backprop_accumulate(net, ev.trace_s, &d_logits, &dFs, grads);
    backprop_accumulate(net, ev.trace_t, nullptr, &dFt, grads);
  } else {
    backprop_accumulate(net, ev.trace_s, &d_logits, nullptr, grads);
  }

  for (const auto& gw : grads.hidden_w)
    if (!gw.all_finite()) throw NumericError("joint gradient: non-finite hidden-layer entry");
  if (!grads.classifier_w.all_finite())
    throw NumericError("joint gradient: non-finite classifier entry");
  return grads;
}

std::pair<Network, AdaptReport> fine_tune(const Network& net, const Matrix& Xs,
                                          const std::vector<int>& ys,
                                          const Matrix& Xt_train,
                                          const std::vector<int>& yt_train,
                                          const AdaptConfig& cfg) {
  cfg.validate();
  Network cur = net;

  // Resolve the kernel once on the initial features and pin it for the run.
  AdaptConfig run_cfg = cfg;
  JointLoss prev;
  {
    JointEval ev0 = joint_eval(cur, Xs, ys, Xt_train, yt_train, cfg);
    run_cfg.kernel = ev0.kernel;
    prev = ev0.loss;
  }

  AdaptReport report;
  report.kernel = *run_cfg.kernel;
  report.initial = IterRecord{0, prev.total, prev.class_term, prev.mmd_term, cfg.eta0};

  double eta = cfg.eta0;
  for (std::size_t it = 1; it <= cfg.iterations; ++it) {
    const NetGrads grads = joint_grad(cur, Xs, ys, Xt_train, yt_train, run_cfg);
    Network stepped = cur;
    apply_update(stepped, grads, eta);
    JointLoss next = joint_loss(stepped, Xs, ys, Xt_train, yt_train, run_cfg);

    double eta_used = eta;
    if (cfg.lr_rule == LrRule::BoldDriver) {
      if (next.total < prev.total) {
        eta *= 1.05;
      } else if (next.total > prev.total) {
        // Roll back, halve and retry once from the same point. An exact tie
        // (flat or fully converged objective) is neither an improvement nor
        // a regression and leaves eta alone.
        eta *= 0.5;
        if (eta < kEtaUnderflow)
          throw ConvergenceError("bold-driver learning rate underflowed at iteration " +
                                     std::to_string(it),
                                 report);
        stepped = cur;
        apply_update(stepped, grads, eta);
        next = joint_loss(stepped, Xs, ys, Xt_train, yt_train, run_cfg);
        eta_used = eta;
      }
    }
    cur = std::move(stepped);
    prev = next;
    report.iters.push_back(IterRecord{it, next.total, next.class_term, next.mmd_term, eta_used});
  }

  report.final_metrics = evaluate(cur, Xt_train, yt_train);
  return {std::move(cur), std::move(report)};
}

EvalMetrics evaluate(const Network& net, const Matrix& X, const std::vector<int>& y) {
  if (X.rows() == 0) throw DataError("evaluate: empty dataset");
  const std::size_t C = net.classes();
  check_labels(y, X.rows(), C);
  const ForwardTrace trace = forward(net, X);

  EvalMetrics m;
  m.confusion.assign(C, std::vector<std::size_t>(C, 0));
  std::size_t correct = 0;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    const double* p = trace.probabilities.row(i);
    std::size_t pred = 0;
    for (std::size_t c = 1; c < C; ++c)
      if (p[c] > p[pred]) pred = c;
    m.confusion[std::size_t(y[i])][pred] += 1;
    if (pred == std::size_t(y[i])) ++correct;
  }
  m.accuracy = double(correct) / double(X.rows());
  m.per_class_accuracy.assign(C, 0.0);
  for (std::size_t c = 0; c < C; ++c) {
    std::size_t row_total = 0;
    for (std::size_t j = 0; j < C; ++j) row_total += m.confusion[c][j];
    if (row_total > 0) m.per_class_accuracy[c] = double(m.confusion[c][c]) / double(row_total);
  }
  return m;
}

std::string AdaptReport::to_csv() const {
  std::string out = "iter,loss_total,loss_class,loss_mmd,eta\n";
  char buf[256];
  for (const auto& r : iters) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", r.iter, r.loss_total,
                  r.loss_class, r.loss_mmd, r.eta);
    out += buf;
  }
  return out;
}

void AdaptReport::save_csv(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out << to_csv();
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace n2a
