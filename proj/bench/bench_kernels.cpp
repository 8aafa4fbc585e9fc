#include <benchmark/benchmark.h>

#include <cmath>
#include <vector>

#include "toda/bvp.hpp"
#include "toda/curvature.hpp"
#include "toda/metric_frame.hpp"
#include "toda/solver.hpp"

using namespace toda;

namespace {

CrossSection torus(int n) { return CrossSection::flat_torus(Eigen::Matrix2d::Identity(), n, n); }

struct ResidualCase {
  CrossSection cs;
  TGrid grid;
  CanonicalOperator op;
  ScalarField u, e;

  explicit ResidualCase(int n)
      : cs(torus(n)),
        grid(TGrid::uniform(1, 4, 80)),
        op(adapt_to_canonical({BvpId::BVP2, std::vector<double>(cs.dof(), 0.2), 1.5}, cs).profile.sample(grid), cs,
           grid, 4),
        u(grid, cs.dof()) {
    for (int i = 0; i <= grid.n; ++i)
      for (int k = 0; k < cs.dof(); ++k) u.at(i, k) = 0.3 * std::sin(0.7 * i + 0.3 * k) * std::exp(-0.1 * i);
    op.exp_all(u, e, false);
  }
};

template <bool Parallel>
void BM_residual(benchmark::State& state) {
  ResidualCase c(int(state.range(0)));
  std::vector<double> r;
  for (auto _ : state) {
    if constexpr (Parallel)
      c.op.residual_parallel(c.u, c.e, r);
    else
      c.op.residual_serial(c.u, c.e, r);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(state.iterations() * c.op.interior_size());
}

std::vector<curv::MetricJet> cusp_jets(int n) {
  std::vector<curv::MetricJet> jets;
  jets.reserve(n);
  for (int i = 0; i < n; ++i) {
    const curv::Vec4 x(0.5 + 2.0 * i / n, 0, 0, 0);
    jets.push_back(curv::fd_jet(curv::hyperbolic_cusp, x, curv::Vec4::Constant(1e-3), {true, false, false, false}));
  }
  return jets;
}

template <bool Parallel>
void BM_curvature(benchmark::State& state) {
  const auto jets = cusp_jets(int(state.range(0)));
  std::vector<curv::PointCurvature> out(jets.size());
  for (auto _ : state) {
    if constexpr (Parallel)
      curv::evaluate_parallel(jets, out, 1);
    else
      curv::evaluate_serial(jets, out, 1);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * int64_t(jets.size()));
}

MetricFrame bvp1_frame(int n) {
  const auto cs = torus(n);
  BvpSpec spec;
  spec.id = BvpId::BVP1;
  spec.phi.assign(cs.dof(), 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) spec.phi[i * n + j] = 0.2 * std::cos(2 * M_PI * i / n);
  const auto p = adapt_to_canonical(spec, cs);
  const auto sol = solve(p.profile, cs, p.phi_normalized, TGrid::uniform(p.map.t_start, 4, 120), {});
  FrameOptions o;
  o.degree = 0;
  return assemble(frame_source(sol.u, p), cs, o);
}

template <bool Parallel>
void BM_frame_curvature(benchmark::State& state) {
  const auto f = bvp1_frame(int(state.range(0)));
  for (auto _ : state) {
    auto c = Parallel ? frame_curvature_parallel(f) : frame_curvature_serial(f);
    benchmark::DoNotOptimize(c.einstein_sup);
  }
}

}  // namespace

BENCHMARK(BM_residual<false>)->Name("residual/serial")->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_residual<true>)->Name("residual/omp")->Arg(16)->Arg(32)->Arg(64);
BENCHMARK(BM_curvature<false>)->Name("curvature/serial")->Arg(1024)->Arg(16384);
BENCHMARK(BM_curvature<true>)->Name("curvature/omp")->Arg(1024)->Arg(16384);
BENCHMARK(BM_frame_curvature<false>)->Name("frame_curvature/serial")->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_frame_curvature<true>)->Name("frame_curvature/omp")->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
