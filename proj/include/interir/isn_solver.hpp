#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "interir/errors.hpp"
#include "interir/operators.hpp"
#include "interir/tensor.hpp"

namespace interir {

inline constexpr double kDefaultEta = 0.01;
inline constexpr double kMinEta = 1e-8;

/// Alternation state of the classical semi-smooth Newton solver.
///
/// Shapes for a [C,H,W] image: a [C,H,H], b [C,W,W], lambda and c_aux
/// [2C,H,W] (the codomain of v_grad).
struct SolverState {
  Tensor degraded;
  Tensor image;
  Tensor a;
  Tensor b;
  Tensor lambda;
  Tensor c_aux;
  double eta = kDefaultEta;
  RegularizerConfig config;
  int iter = 0;
  /// Set by init_classical when a channel had a zero Gram matrix and the
  /// identity was substituted.
  bool identity_guard = false;
};

/// One outer iteration of the solver, measured after the multiplier update.
struct TraceRecord {
  int iter = 0;
  double lagrangian = 0.0;
  double f_norm = 0.0;
  double primal_residual = 0.0;
  /// Step accepted by the last inner image update (0 if none moved).
  double eta = 0.0;
};

/// One inner image update.
struct StepRecord {
  int outer = 0;
  int inner = 0;
  double f_norm_sq_before = 0.0;
  double f_norm_sq_after = 0.0;
  double eta = 0.0;
  bool stalled = false;
};

struct SolverTrace {
  std::vector<TraceRecord> records;
  std::vector<StepRecord> steps;

  bool any_stall() const noexcept;
};

/// Raised when a numerical failure aborts `solve`; carries the trace so far.
class SolveError : public NumericalFailure {
 public:
  SolveError(const NumericalFailure& cause, SolverTrace trace)
      : NumericalFailure(cause), trace_(std::move(trace)) {}
  const SolverTrace& trace() const noexcept { return trace_; }

 private:
  SolverTrace trace_;
};

/// I0 = D, A0/B0 = Frobenius-normalized Gram matrices per channel,
/// Lambda0 = V(I0), C0 = S(Lambda0/sigma + V(I0)).
SolverState init_classical(const Tensor& degraded, const RegularizerConfig& config,
                           double eta = kDefaultEta);

/// F(I) = A^T (A I B - D) B^T + V^T [Lambda + eps (V(I) - S(Lambda/sigma + V(I)))].
Tensor compute_F(const SolverState& state);

/// H(I) = A^T A F B B^T + sigma V^T [V(F) .* (1 - S_d(Lambda/sigma + V(I)))].
Tensor compute_H(const SolverState& state, const Tensor& f_val);

struct StepOutcome {
  SolverState state;
  StepRecord record;
};

/// I <- I - eta H(I), halving eta (down to kMinEta) until |F|^2 does not
/// increase. If no step qualifies the input state is returned unchanged with
/// record.stalled set.
StepOutcome step_I(const SolverState& state);

/// Lambda <- Lambda + eps [V(I) - S(Lambda/sigma + V(I))]; c_aux becomes the
/// S(...) term used in that update.
SolverState step_multiplier(const SolverState& state);

/// Backtracked A then B updates (see update_A_classical / update_B_classical).
SolverState step_factors(const SolverState& state);

/// Augmented Lagrangian value at the current state, using c_aux as C.
double augmented_lagrangian(const SolverState& state);

struct SolverOptions {
  int outer_iters = 16;
  int inner_iters = 4;
  double eta = kDefaultEta;
  /// Keep A = B = identity and skip their updates (pure denoising).
  bool freeze_factors = false;
};

struct SolveResult {
  Tensor image;
  SolverTrace trace;
  SolverState state;
};

/// Runs init_classical followed by `outer_iters` rounds of
/// [inner_iters x step_I, A/B update, step_multiplier].
SolveResult solve(const Tensor& degraded, const RegularizerConfig& config,
                  const SolverOptions& options = {});

/// CSV with header "iter,lagrangian,f_norm,primal_residual,eta".
void write_trace_csv(const SolverTrace& trace, std::ostream& out);
void write_trace_csv(const SolverTrace& trace, const std::filesystem::path& path);

}  // namespace interir
