#include "interir/isn_solver.hpp"

#include <cmath>
#include <fstream>
#include <ostream>

#include "interir/format.hpp"

namespace interir {

namespace {

double squared_norm(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v * v;
  return s;
}

// Per-channel M / |M|_F; channels with a zero norm fall back to identity.
Tensor normalized_gram(const Tensor& gram, bool& guard_used) {
  Tensor out = gram;
  const std::size_t n = gram.dim(1);
  const auto norms = channel_frobenius(gram);
  for (std::size_t c = 0; c < gram.dim(0); ++c) {
    if (norms[c] > 0.0) {
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(c, i, j) /= norms[c];
    } else {
      guard_used = true;
      for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) out.at(c, i, j) = i == j ? 1.0 : 0.0;
    }
  }
  return out;
}

// Lambda/sigma + V(I): the argument of S and S_d.
Tensor shrink_argument(const SolverState& s, const Tensor& v_image) {
  return s.lambda * (1.0 / s.config.sigma) + v_image;
}

}  // namespace

bool SolverTrace::any_stall() const noexcept {
  for (const auto& s : steps)
    if (s.stalled) return true;
  return false;
}

SolverState init_classical(const Tensor& degraded, const RegularizerConfig& config,
                           double eta) {
  config.validate();
  if (degraded.rank() != 3) {
    throw DimensionError("rank", "init_classical expects [C,H,W], got " +
                                     shape_string(degraded.shape()));
  }
  if (!degraded.all_finite()) {
    throw NumericalFailure(0, "init_classical: non-finite input");
  }
  SolverState s;
  s.degraded = degraded;
  s.image = degraded;
  s.config = config;
  s.eta = eta;
  const Tensor image_t = channel_transpose(s.image);
  s.a = normalized_gram(channel_matmul(s.image, image_t), s.identity_guard);
  s.b = normalized_gram(channel_matmul(image_t, s.image), s.identity_guard);
  const Tensor v_image = v_grad(s.image);
  s.lambda = v_image;
  s.c_aux = soft_threshold(shrink_argument(s, v_image), config.threshold());
  return s;
}

Tensor compute_F(const SolverState& s) {
  const Tensor residual = channel_matmul(channel_matmul(s.a, s.image), s.b) - s.degraded;
  Tensor data_term =
      channel_matmul(channel_matmul(channel_transpose(s.a), residual), channel_transpose(s.b));
  const Tensor v_image = v_grad(s.image);
  const Tensor shrunk = soft_threshold(shrink_argument(s, v_image), s.config.threshold());
  const Tensor multiplier_term = s.lambda + s.config.epsilon * (v_image - shrunk);
  return data_term += v_adjoint(multiplier_term);
}

Tensor compute_H(const SolverState& s, const Tensor& f_val) {
  const Tensor ata = channel_matmul(channel_transpose(s.a), s.a);
  const Tensor bbt = channel_matmul(s.b, channel_transpose(s.b));
  Tensor out = channel_matmul(channel_matmul(ata, f_val), bbt);
  // The mask lives in V's codomain, so it multiplies V(F) rather than F.
  const Tensor active =
      soft_threshold_sub(shrink_argument(s, v_grad(s.image)), s.config.threshold());
  const Tensor masked = hadamard(v_grad(f_val), scalar_minus(1.0, active));
  return out += s.config.sigma * v_adjoint(masked);
}

StepOutcome step_I(const SolverState& state) {
  StepOutcome outcome{state, {}};
  outcome.record.outer = state.iter;
  const Tensor f_old = compute_F(state);
  const double f_old_sq = squared_norm(f_old);
  outcome.record.f_norm_sq_before = f_old_sq;
  outcome.record.f_norm_sq_after = f_old_sq;
  if (f_old_sq == 0.0) return outcome;

  const Tensor h = compute_H(state, f_old);
  if (!h.all_finite()) throw NumericalFailure(state.iter, "non-finite H in image step");
  for (double eta = state.eta; eta >= kMinEta; eta *= 0.5) {
    SolverState trial = state;
    trial.image = state.image - eta * h;
    const double f_new_sq = squared_norm(compute_F(trial));
    if (std::isfinite(f_new_sq) && f_new_sq <= f_old_sq) {
      outcome.state = std::move(trial);
      outcome.record.eta = eta;
      outcome.record.f_norm_sq_after = f_new_sq;
      return outcome;
    }
  }
  outcome.record.stalled = true;
  return outcome;
}

SolverState step_multiplier(const SolverState& state) {
  SolverState next = state;
  const Tensor v_image = v_grad(state.image);
  const Tensor shrunk = soft_threshold(shrink_argument(state, v_image), state.config.threshold());
  next.lambda = state.lambda + state.config.epsilon * (v_image - shrunk);
  next.c_aux = shrunk;
  return next;
}

SolverState step_factors(const SolverState& state) {
  SolverState next = state;
  next.a = update_A_classical(state.image, state.a, state.b, state.degraded, state.config,
                              state.iter)
               .value;
  next.b = update_B_classical(state.image, next.a, state.b, state.degraded, state.config,
                              state.iter)
               .value;
  return next;
}

double augmented_lagrangian(const SolverState& s) {
  const Tensor residual = channel_matmul(channel_matmul(s.a, s.image), s.b) - s.degraded;
  double l1 = 0.0;
  for (double v : s.c_aux.data()) l1 += std::abs(v);
  const Tensor gap = v_grad(s.image) - s.c_aux;
  return 0.5 * squared_norm(residual) + s.config.alpha * l1 +
         0.5 * s.config.beta * squared_norm(s.a) + 0.5 * s.config.gamma * squared_norm(s.b) +
         dot(s.lambda, gap) + 0.5 * s.config.epsilon * squared_norm(gap);
}

SolveResult solve(const Tensor& degraded, const RegularizerConfig& config,
                  const SolverOptions& options) {
  if (options.outer_iters < 1 || options.inner_iters < 1) {
    throw SpecError("solve: outer_iters and inner_iters must be >= 1");
  }
  SolveResult result;
  SolverState state = init_classical(degraded, config, options.eta);
  if (options.freeze_factors) {
    state.a = Tensor::identity(degraded.dim(0), degraded.dim(1));
    state.b = Tensor::identity(degraded.dim(0), degraded.dim(2));
  }
  try {
    for (int outer = 0; outer < options.outer_iters; ++outer) {
      state.iter = outer;
      double accepted = 0.0;
      for (int inner = 0; inner < options.inner_iters; ++inner) {
        StepOutcome step = step_I(state);
        step.record.inner = inner;
        accepted = step.record.eta;
        result.trace.steps.push_back(step.record);
        state = std::move(step.state);
      }
      if (!options.freeze_factors) state = step_factors(state);
      state = step_multiplier(state);
      if (!state.image.all_finite() || !state.lambda.all_finite()) {
        throw NumericalFailure(outer, "non-finite solver state");
      }
      TraceRecord rec;
      rec.iter = outer;
      rec.lagrangian = augmented_lagrangian(state);
      rec.f_norm = l2_norm(compute_F(state));
      rec.primal_residual = l2_norm(v_grad(state.image) - state.c_aux);
      rec.eta = accepted;
      result.trace.records.push_back(rec);
    }
  } catch (const SolveError&) {
    throw;
  } catch (const NumericalFailure& failure) {
    throw SolveError(failure, result.trace);
  }
  result.image = state.image;
  result.state = std::move(state);
  return result;
}

void write_trace_csv(const SolverTrace& trace, std::ostream& out) {
  out << "iter,lagrangian,f_norm,primal_residual,eta\n";
  for (const auto& r : trace.records) {
    out << r.iter << ',' << format_double(r.lagrangian) << ',' << format_double(r.f_norm)
        << ',' << format_double(r.primal_residual) << ',' << format_double(r.eta) << '\n';
  }
}

void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write trace " + path.string());
  write_trace_csv(trace, out);
}

}  // namespace interir
