#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hqo/certify.hpp"
#include "hqo/csv.hpp"

namespace hqo {

std::string to_string(Termination t) {
  switch (t) {
    case Termination::Satisfied:
      return "satisfied";
    case Termination::Certified:
      return "certified";
    case Termination::Budget:
      return "budget";
  }
  return "unknown";
}

namespace {

Mesh refine_step(const Mesh& mesh, const GmrOptions& opts, const IndicatorField& eta) {
  if (opts.refine == RefineMode::Uniform) return refine_uniform(mesh);
  std::vector<int> marked = (opts.marking == Marking::HalfMax)
                                ? mark_half_max(eta)
                                : mark_dorfler(eta, opts.dorfler_theta);
  // A vanishing indicator gives no direction; refine everything instead of stalling.
  if (marked.empty()) return refine_uniform(mesh);
  return refine_bisection(mesh, marked);
}

}  // namespace

CertificationReport run_gmr(const ProblemSpec& spec, std::shared_ptr<const Mesh> initial,
                            const GmrOptions& opts, const IterationCallback& progress) {
  spec.validate();
  if (!initial) throw std::invalid_argument("run_gmr needs an initial mesh");
  if (opts.max_iters < 0) throw std::invalid_argument("max_iters must be nonnegative");
  if (opts.extra < 0) throw std::invalid_argument("the extra eigenpair count must be nonnegative");
  const bool estimate = opts.source == IndexSource::CrEstimate;
  if (estimate && !spec.family.is_cr())
    throw std::invalid_argument("the CR index estimate needs the Crouzeix-Raviart family");
  if (!estimate && opts.i_star < 0) throw std::invalid_argument("i* must be nonnegative");
  if (is_dirichlet_unit_square(spec, *initial)) check_square_resonance(spec.k2);

  CertificationReport report;
  std::shared_ptr<const Mesh> mesh = std::move(initial);
  IndicatorField eta;

  for (int iter = 0;; ++iter) {
    if (iter > 0) mesh = std::make_shared<const Mesh>(refine_step(*mesh, opts, eta));

    const DiscreteOperators ops = discretize(build_space(mesh, spec.family));
    const int free = ops.space->free_count();
    const double h = global_mesh_size(*mesh);
    const int below = count_below(ops.stiffness, ops.mass, spec.k2);

    IterationRecord rec;
    rec.iter = iter;
    rec.ndof = free;
    rec.h = h;

    std::optional<double> threshold;
    int m = 0;
    if (estimate) {
      threshold = lower_bound_threshold(spec.k2, h, opts.kappa);
      const int reach = threshold ? count_below(ops.stiffness, ops.mass, *threshold) : below;
      m = reach + opts.extra + 1;
    } else {
      m = std::max(below, opts.i_star) + opts.extra + 1;
    }
    m = std::min(m, free);
    if (m < 1) throw std::invalid_argument("the mesh has no free degrees of freedom");

    const EigenSet eig = compute_eigenpairs(ops, m, opts.eig);
    rec.eigenpairs = m;

    std::optional<int> index;
    if (estimate) {
      if (threshold) {
        const DiscreteOperators p1 = discretize(build_space(mesh, ElementFamily::lagrange(1)));
        const auto bounds = bound_ladder(eig, p1, opts.kappa, opts.upper);
        try {
          const IndexEstimate est = estimate_index(bounds, spec.k2);
          index = est.j_star;
          rec.enclosure = est.enclosure_width;
          rec.certified = est.certified;
        } catch (const IndexError&) {
          // The ladder stops at the free DOF count before a bound reaches k2.
        }
      }
    } else {
      index = opts.i_star;
    }

    if (index && *index < eig.size()) {
      const Criterion c = check_criterion(eig.values, spec.k2, *index);
      rec.i_star = index;
      rec.lambda_lo = c.lambda_lo;
      rec.lambda_hi = c.lambda_hi;
      rec.condition = spec.k2 - c.lambda_lo;
      rec.satisfied = c.satisfied;
      rec.alpha_star = c.alpha_star;
    }
    if (!estimate) rec.certified = rec.satisfied;
    rec.certified = rec.certified && rec.satisfied;

    const int avg = std::max(index.value_or(below), 1);
    if (avg + opts.extra <= eig.size()) {
      eta = residual_indicator(eig, avg, opts.extra, opts.indicator);
    } else {
      eta = residual_indicator(eig, std::min(avg, eig.size()), 0, opts.indicator);
    }
    rec.eta_total = eta.total();

    if (rec.satisfied && rec.alpha_star < 1e-6) {
      std::ostringstream msg;
      msg << "iteration " << iter << ": alpha* = " << format_double(rec.alpha_star)
          << " is below 1e-6, k2 is nearly resonant";
      report.warnings.push_back(msg.str());
    }
    report.iterations.push_back(rec);
    if (progress) progress(rec);

    const bool done = estimate ? (rec.satisfied && rec.certified) : rec.satisfied;
    if (done) {
      report.reason = estimate ? Termination::Certified : Termination::Satisfied;
      break;
    }
    if (iter >= opts.max_iters) {
      report.reason = Termination::Budget;
      break;
    }
  }
  report.final_mesh = mesh;
  return report;
}

std::string certification_csv(const CertificationReport& report) {
  CsvTable table{"iter",      "ndof",      "h",         "i_star",    "lambda_lo",
                 "lambda_hi", "condition", "enclosure", "certified", "eta_total"};
  for (const auto& r : report.iterations) {
    table.cell(r.iter).cell(r.ndof).cell(r.h);
    if (r.i_star) {
      table.cell(*r.i_star).cell(r.lambda_lo).cell(r.lambda_hi).cell(r.condition);
    } else {
      table.cell(-1).empty().empty().empty();
    }
    if (r.enclosure)
      table.cell(*r.enclosure);
    else
      table.empty();
    table.cell(r.certified).cell(r.eta_total);
    table.end_row();
  }
  return table.str();
}

// Convergence studies -----------------------------------------------------------------

StudyResult convergence_study(const ProblemSpec& spec, std::shared_ptr<const Mesh> initial,
                              int refinements, const StudyOptions& opts) {
  spec.validate();
  if (!initial) throw std::invalid_argument("convergence study needs an initial mesh");
  if (refinements < 0) throw std::invalid_argument("refinements must be nonnegative");

  const bool square = is_dirichlet_unit_square(spec, *initial);
  if (square) check_square_resonance(spec.k2);

  std::vector<std::shared_ptr<const Mesh>> meshes{initial};
  for (int r = 0; r < refinements; ++r)
    meshes.push_back(std::make_shared<const Mesh>(refine_uniform(*meshes.back())));

  std::vector<DiscreteOperators> ops;
  ops.reserve(meshes.size());
  for (const auto& m : meshes) ops.push_back(discretize(build_space(m, spec.family)));

  StudyResult result;
  if (opts.i_star) {
    result.i_star = *opts.i_star;
  } else if (square) {
    result.i_star = square_eigenvalue_count(spec.k2);
  } else {
    result.i_star = count_below(ops.back().stiffness, ops.back().mass, spec.k2);
  }

  const int degree = opts.error_degree > 0 ? opts.error_degree : 2 * spec.family.order + 4;
  std::optional<SineSeries> series;
  std::optional<FeFunction> nested;
  if (square) {
    result.reference = "sine-series";
    series.emplace(rhs_field(spec.rhs), spec.k2);
  } else {
    result.reference = "nested-refinement";
    auto fine = std::make_shared<const Mesh>(refine_uniform(refine_uniform(*meshes.back())));
    nested.emplace(solve_helmholtz(spec, fine).u);
  }

  for (std::size_t level = 0; level < meshes.size(); ++level) {
    const DiscreteOperators& op = ops[level];
    StudyRecord rec;
    rec.h = global_mesh_size(*meshes[level]);
    rec.ndof = op.space->free_count();
    const FeFunction u = solve_helmholtz(spec, op).u;
    if (series) {
      rec.error = l2_error(u, *series, degree);
    } else {
      // Lift the coarse solution onto the reference mesh's hierarchy.
      rec.error = l2_error(u, *nested, degree);
    }
    const int m = std::min(result.i_star + 1, op.space->free_count());
    const EigenSet eig = compute_eigenpairs(op, m, opts.eig);
    if (result.i_star < eig.size()) {
      const Criterion c = check_criterion(eig.values, spec.k2, result.i_star);
      rec.ev_i = c.lambda_lo;
      rec.ev_ipo = c.lambda_hi;
      rec.satisfied = c.satisfied;
    } else {
      // Coarse meshes may carry fewer eigenpairs than i* + 1.
      rec.ev_i = result.i_star <= eig.size() ? eig.lambda(result.i_star)
                                             : std::numeric_limits<double>::quiet_NaN();
      rec.ev_ipo = std::numeric_limits<double>::quiet_NaN();
    }
    result.records.push_back(rec);
  }
  return result;
}

std::string study_csv(const StudyResult& study) {
  CsvTable table{"h", "ndof", "error", "EV_i", "EV_ipo"};
  for (const auto& r : study.records) {
    table.cell(r.h).cell(r.ndof).cell(r.error);
    if (std::isnan(r.ev_i))
      table.empty();
    else
      table.cell(r.ev_i);
    if (std::isnan(r.ev_ipo))
      table.empty();
    else
      table.cell(r.ev_ipo);
    table.end_row();
  }
  return table.str();
}

double fitted_rate(const std::vector<StudyRecord>& records) {
  if (records.size() < 2) throw std::invalid_argument("a rate needs at least two records");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(records.size());
  for (const auto& r : records) {
    const double x = std::log(r.h), y = std::log(r.error);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace hqo
