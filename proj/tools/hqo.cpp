// hqo: mesh generation, eigen analysis, certified refinement and convergence
// studies for the Helmholtz problem -Lap u - k2 u = f.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <system_error>

#include <CLI11.hpp>

#include "hqo/certify.hpp"
#include "hqo/csv.hpp"

namespace {

enum Exit : int {
  kOk = 0,
  kInternal = 1,
  kUsage = 2,
  kFile = 3,
  kEigensolver = 4,
  kBudget = 5,
  kResonance = 6,
};

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GeometryArgs {
  std::string geometry = "unit-square";
  std::string mesh_file;
  int n = 0;
  double outer = 2.0;
  double inner = 0.5;
  std::string bc = "dirichlet";
  std::string inner_bc = "dirichlet";

  void add(CLI::App* cmd, int default_n, bool allow_file) {
    n = default_n;
    cmd->add_option("--geometry", geometry, "Built-in geometry")
        ->check(CLI::IsMember({"unit-square", "square-hole"}))
        ->capture_default_str();
    cmd->add_option("--n", n, "Cells across the (outer) side")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--outer", outer, "Outer side length of square-hole")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--inner", inner, "Hole side length of square-hole")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--bc", bc, "Boundary condition on the outer boundary")
        ->check(CLI::IsMember({"dirichlet", "neumann"}))
        ->capture_default_str();
    cmd->add_option("--inner-bc", inner_bc, "Boundary condition on the hole boundary")
        ->check(CLI::IsMember({"dirichlet", "neumann"}))
        ->capture_default_str();
    if (allow_file) cmd->add_option("--mesh", mesh_file, "Read the mesh from a file instead");
  }

  void validate() const {
    if (geometry == "square-hole" && !(inner < outer))
      throw UsageError("--inner must be smaller than --outer");
  }

  hqo::Geometry kind() const {
    if (!mesh_file.empty()) return hqo::Geometry::Custom;
    return geometry == "unit-square" ? hqo::Geometry::UnitSquare : hqo::Geometry::SquareWithHole;
  }

  std::shared_ptr<const hqo::Mesh> build() const {
    if (!mesh_file.empty()) return std::make_shared<const hqo::Mesh>(hqo::load_mesh(mesh_file));
    const auto tag = [](const std::string& s) {
      return s == "neumann" ? hqo::BoundaryTag::Neumann : hqo::BoundaryTag::Dirichlet;
    };
    if (geometry == "unit-square")
      return std::make_shared<const hqo::Mesh>(
          hqo::build_unit_square(n, hqo::SideTags::all(tag(bc))));
    return std::make_shared<const hqo::Mesh>(
        hqo::build_square_with_hole(outer, inner, n, tag(bc), tag(inner_bc)));
  }
};

struct FamilyArgs {
  std::string family = "p1";
  int p = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--family", family, "Finite element family")
        ->check(CLI::IsMember({"p1", "p2", "cr"}))
        ->capture_default_str();
    cmd->add_option("--p", p, "Lagrange polynomial degree (overrides p1/p2)")
        ->check(CLI::Range(1, 2));
  }

  hqo::ElementFamily get() const {
    if (family == "cr") {
      if (p > 1) throw UsageError("--p 2 is not available for the cr family");
      return hqo::ElementFamily::crouzeix_raviart();
    }
    const int degree = p > 0 ? p : (family == "p2" ? 2 : 1);
    return hqo::ElementFamily::lagrange(degree);
  }
};

struct RhsArgs {
  std::string kind = "bump";
  double amplitude = 5e4;
  double width = 10.0;
  std::vector<double> center{0.3, 0.4};
  std::vector<int> modes{1, 1};

  void add(CLI::App* cmd) {
    cmd->add_option("--rhs", kind, "Right-hand side: Gaussian bump or sine product")
        ->check(CLI::IsMember({"bump", "sine"}))
        ->capture_default_str();
    cmd->add_option("--amplitude", amplitude, "Right-hand side amplitude")->capture_default_str();
    cmd->add_option("--width", width, "Bump width w in exp(-w^2 |x-c|^2)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    cmd->add_option("--center", center, "Bump center x y")->expected(2)->capture_default_str();
    cmd->add_option("--modes", modes, "Sine modes i j")
        ->expected(2)
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
  }

  hqo::RhsData get() const {
    if (kind == "sine") return hqo::SineProduct{modes[0], modes[1], amplitude};
    return hqo::GaussianBump{amplitude, width, hqo::Point(center[0], center[1])};
  }
};

std::uint64_t seed_from(const CLI::Option* flag, std::uint64_t value) {
  if (flag->count() > 0) return value;
  if (const char* env = std::getenv("HQO_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0') throw UsageError("HQO_SEED must be a nonnegative integer");
    return v;
  }
  return 0;
}

void write_output(const std::string& path, const std::string& contents) {
  hqo::write_text_file(path, contents);
}

int topology_holes(const hqo::Mesh& m) {
  // Euler characteristic of a connected planar triangulation: V - E + T = 1 - holes.
  return 1 - (m.num_vertices() - m.num_edges() + m.num_triangles());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certified mesh refinement for the Helmholtz equation", "hqo"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // mesh ------------------------------------------------------------------------
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate a built-in mesh or validate a mesh file");
  GeometryArgs mesh_geo;
  mesh_geo.add(mesh_cmd, 8, false);
  std::string mesh_out, mesh_validate;
  int mesh_refine = 0;
  mesh_cmd->add_option("--refine", mesh_refine, "Uniform refinements after generation")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  mesh_cmd->add_option("-o,--output", mesh_out, "Mesh file to write");
  mesh_cmd->add_option("--validate", mesh_validate, "Mesh file to check");

  // eig -------------------------------------------------------------------------
  auto* eig_cmd = app.add_subcommand("eig", "Smallest eigenvalues, with bounds for cr");
  GeometryArgs eig_geo;
  eig_geo.add(eig_cmd, 16, true);
  FamilyArgs eig_family;
  eig_family.add(eig_cmd);
  int eig_m = 6;
  double eig_kappa = hqo::default_kappa;
  double eig_tol = 1e-10;
  std::uint64_t eig_seed = 0;
  std::string eig_out, eig_upper = "rq";
  eig_cmd->add_option("--m", eig_m, "Number of eigenpairs")->capture_default_str();
  eig_cmd->add_option("--kappa", eig_kappa, "Constant in the cr lower bound")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  eig_cmd->add_option("--upper", eig_upper, "cr upper bound: per-vector Rayleigh quotient or Rayleigh-Ritz")
      ->check(CLI::IsMember({"rq", "ritz"}))
      ->capture_default_str();
  eig_cmd->add_option("--tol", eig_tol, "Relative residual tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* eig_seed_opt = eig_cmd->add_option("--seed", eig_seed, "Start block seed (default HQO_SEED or 0)");
  eig_cmd->add_option("-o,--output", eig_out, "CSV file: index,lambda,lower,upper")->required();

  // certify ---------------------------------------------------------------------
  auto* cert_cmd = app.add_subcommand("certify", "Refine until the quasi-optimality criterion holds");
  GeometryArgs cert_geo;
  cert_geo.add(cert_cmd, 4, true);
  FamilyArgs cert_family;
  cert_family.add(cert_cmd);
  RhsArgs cert_rhs;
  cert_rhs.add(cert_cmd);
  double cert_k2 = 0.0, cert_kappa = hqo::default_kappa, cert_theta = 0.5, cert_tol = 1e-10;
  int cert_istar = -1, cert_extra = 3, cert_max_iters = 20;
  std::string cert_refine = "uniform", cert_estimate = "oracle", cert_marking = "half-max";
  std::string cert_out, cert_mesh_out, cert_solution_out, cert_upper = "rq";
  bool cert_neumann = false;
  std::uint64_t cert_seed = 0;
  cert_cmd->add_option("--k2", cert_k2, "Squared wave number")->required()->check(CLI::PositiveNumber);
  cert_cmd->add_option("--refine", cert_refine, "Refinement strategy")
      ->check(CLI::IsMember({"uniform", "adaptive"}))
      ->capture_default_str();
  cert_cmd->add_option("--estimate", cert_estimate, "Source of the index i*: given (--istar) or cr bounds")
      ->check(CLI::IsMember({"oracle", "cr"}))
      ->capture_default_str();
  cert_cmd->add_option("--istar", cert_istar, "Known number of Laplace eigenvalues below k2")
      ->check(CLI::NonNegativeNumber);
  cert_cmd->add_option("--extra", cert_extra, "Extra eigenpairs l for ladder and indicator")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cert_cmd->add_option("--kappa", cert_kappa, "Constant in the cr lower bound")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cert_cmd->add_option("--upper", cert_upper, "cr upper bound: per-vector Rayleigh quotient or Rayleigh-Ritz")
      ->check(CLI::IsMember({"rq", "ritz"}))
      ->capture_default_str();
  cert_cmd->add_option("--max-iters", cert_max_iters, "Refinement budget")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  cert_cmd->add_option("--marking", cert_marking, "Adaptive marking strategy")
      ->check(CLI::IsMember({"half-max", "dorfler"}))
      ->capture_default_str();
  cert_cmd->add_option("--theta", cert_theta, "Doerfler bulk parameter")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  cert_cmd->add_flag("--include-neumann", cert_neumann, "Add Neumann boundary fluxes to the indicator");
  cert_cmd->add_option("--tol", cert_tol, "Eigensolver relative residual tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* cert_seed_opt = cert_cmd->add_option("--seed", cert_seed, "Start block seed (default HQO_SEED or 0)");
  cert_cmd->add_option("-o,--output", cert_out, "Certification CSV")->required();
  cert_cmd->add_option("--mesh-out", cert_mesh_out, "Write the final mesh");
  cert_cmd->add_option("--solution-out", cert_solution_out, "Write the final Helmholtz solution coefficients");

  // study -----------------------------------------------------------------------
  auto* study_cmd = app.add_subcommand("study", "Error and eigenvalues over uniform refinements");
  GeometryArgs study_geo;
  study_geo.add(study_cmd, 4, true);
  FamilyArgs study_family;
  study_family.add(study_cmd);
  RhsArgs study_rhs;
  study_rhs.add(study_cmd);
  double study_k2 = 0.0, study_tol = 1e-10;
  int study_refinements = 5, study_istar = -1;
  std::uint64_t study_seed = 0;
  std::string study_out;
  study_cmd->add_option("--k2", study_k2, "Squared wave number")->required()->check(CLI::PositiveNumber);
  study_cmd->add_option("--refinements", study_refinements, "Number of uniform refinements")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  study_cmd->add_option("--istar", study_istar, "Index i* (default: known spectrum or inertia)")
      ->check(CLI::NonNegativeNumber);
  study_cmd->add_option("--tol", study_tol, "Eigensolver relative residual tolerance")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  auto* study_seed_opt = study_cmd->add_option("--seed", study_seed, "Start block seed (default HQO_SEED or 0)");
  study_cmd->add_option("-o,--output", study_out, "Study CSV: h,ndof,error,EV_i,EV_ipo")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (mesh_cmd->parsed()) {
      if (!mesh_validate.empty()) {
        const hqo::Mesh m = hqo::load_mesh(mesh_validate);
        std::cout << "valid mesh: " << m.num_vertices() << " vertices, " << m.num_triangles()
                  << " triangles, " << m.boundary_edges().size() << " boundary edges\n"
                  << "area " << hqo::format_double(hqo::total_area(m)) << ", h "
                  << hqo::format_double(hqo::global_mesh_size(m)) << ", min angle "
                  << hqo::format_double(hqo::min_angle(m) * 180.0 / 3.141592653589793)
                  << " deg, holes " << topology_holes(m) << "\n";
        return kOk;
      }
      if (mesh_out.empty()) throw UsageError("mesh needs -o/--output or --validate");
      mesh_geo.validate();
      hqo::Mesh m = *mesh_geo.build();
      for (int r = 0; r < mesh_refine; ++r) m = hqo::refine_uniform(m);
      write_output(mesh_out, hqo::write_mesh(m));
      std::cout << "wrote " << mesh_out << ": " << m.num_vertices() << " vertices, "
                << m.num_triangles() << " triangles, holes " << topology_holes(m) << "\n";
      return kOk;
    }

    if (eig_cmd->parsed()) {
      if (eig_m < 1) throw UsageError("--m must be at least 1");
      eig_geo.validate();
      const hqo::ElementFamily fam = eig_family.get();
      hqo::EigenSolveOptions opts;
      opts.tol = eig_tol;
      opts.seed = seed_from(eig_seed_opt, eig_seed);
      const auto mesh = eig_geo.build();
      const auto ops = hqo::discretize(hqo::build_space(mesh, fam));
      if (eig_m > ops.space->free_count())
        throw UsageError("--m exceeds the number of free degrees of freedom");
      const hqo::EigenSet e = hqo::compute_eigenpairs(ops, eig_m, opts);
      hqo::CsvTable table{"index", "lambda", "lower", "upper"};
      std::vector<hqo::BoundedEigen> bounds;
      if (fam.is_cr()) {
        const auto p1 = hqo::discretize(hqo::build_space(mesh, hqo::ElementFamily::lagrange(1)));
        bounds = hqo::bound_ladder(e, p1, eig_kappa,
                                   eig_upper == "ritz" ? hqo::UpperBoundMode::RayleighRitz
                                                       : hqo::UpperBoundMode::RayleighQuotient);
      }
      for (int i = 1; i <= e.size(); ++i) {
        table.cell(i).cell(e.lambda(i));
        if (fam.is_cr())
          table.cell(bounds[i - 1].lower).cell(bounds[i - 1].upper);
        else
          table.empty().empty();
        table.end_row();
      }
      write_output(eig_out, table.str());
      std::cout << fam.name() << " on " << mesh->num_triangles() << " triangles, "
                << ops.space->free_count() << " free DOFs: lambda_1 = "
                << hqo::format_double(e.lambda(1)) << ", lambda_" << e.size() << " = "
                << hqo::format_double(e.lambda(e.size())) << "\n";
      return kOk;
    }

    if (cert_cmd->parsed()) {
      cert_geo.validate();
      hqo::ProblemSpec spec;
      spec.geometry = cert_geo.kind();
      spec.family = cert_family.get();
      spec.k2 = cert_k2;
      spec.rhs = cert_rhs.get();
      spec.validate();
      hqo::GmrOptions opts;
      opts.refine = cert_refine == "adaptive" ? hqo::RefineMode::Adaptive : hqo::RefineMode::Uniform;
      opts.source = cert_estimate == "cr" ? hqo::IndexSource::CrEstimate : hqo::IndexSource::Oracle;
      if (opts.source == hqo::IndexSource::Oracle) {
        if (cert_istar < 0) throw UsageError("--estimate oracle needs --istar");
        opts.i_star = cert_istar;
      } else if (!spec.family.is_cr()) {
        throw UsageError("--estimate cr needs --family cr");
      }
      opts.extra = cert_extra;
      opts.kappa = cert_kappa;
      opts.max_iters = cert_max_iters;
      opts.marking = cert_marking == "dorfler" ? hqo::Marking::Dorfler : hqo::Marking::HalfMax;
      opts.dorfler_theta = cert_theta;
      opts.indicator.include_neumann = cert_neumann;
      opts.upper = cert_upper == "ritz" ? hqo::UpperBoundMode::RayleighRitz
                                        : hqo::UpperBoundMode::RayleighQuotient;
      opts.eig.tol = cert_tol;
      opts.eig.seed = seed_from(cert_seed_opt, cert_seed);

      const auto mesh = cert_geo.build();
      const auto print = [](const hqo::IterationRecord& r) {
        std::cout << "iter " << r.iter << ": ndof " << r.ndof << ", h " << hqo::format_double(r.h);
        if (r.i_star)
          std::cout << ", index " << *r.i_star << ", k2 - lambda " << hqo::format_double(r.condition);
        else
          std::cout << ", index unavailable";
        if (r.enclosure) std::cout << ", enclosure " << hqo::format_double(*r.enclosure);
        std::cout << (r.certified ? ", certified" : "") << std::endl;
      };
      const hqo::CertificationReport report = hqo::run_gmr(spec, mesh, opts, print);
      write_output(cert_out, hqo::certification_csv(report));
      for (const auto& w : report.warnings) std::cout << "warning: " << w << "\n";
      std::cout << "termination: " << hqo::to_string(report.reason) << "\n";
      if (!cert_mesh_out.empty()) write_output(cert_mesh_out, hqo::write_mesh(*report.final_mesh));
      if (!cert_solution_out.empty()) {
        const auto sol = hqo::solve_helmholtz(spec, report.final_mesh);
        write_output(cert_solution_out, hqo::coefficients_csv(sol.u.coefficients));
      }
      return report.success() ? kOk : kBudget;
    }

    if (study_cmd->parsed()) {
      study_geo.validate();
      hqo::ProblemSpec spec;
      spec.geometry = study_geo.kind();
      spec.family = study_family.get();
      spec.k2 = study_k2;
      spec.rhs = study_rhs.get();
      spec.validate();
      hqo::StudyOptions opts;
      if (study_istar >= 0) opts.i_star = study_istar;
      opts.eig.tol = study_tol;
      opts.eig.seed = seed_from(study_seed_opt, study_seed);
      const auto result = hqo::convergence_study(spec, study_geo.build(), study_refinements, opts);
      write_output(study_out, hqo::study_csv(result));
      std::cout << "i* = " << result.i_star << ", reference: " << result.reference << "\n";
      for (const auto& r : result.records)
        std::cout << "h " << hqo::format_double(r.h) << ": ndof " << r.ndof << ", error "
                  << hqo::format_double(r.error) << (r.satisfied ? ", criterion holds" : "")
                  << "\n";
      return kOk;
    }
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const hqo::MeshParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFile;
  } catch (const hqo::MeshError& e) {
    std::cerr << "error: invalid mesh: " << e.what() << "\n";
    return kFile;
  } catch (const std::system_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFile;
  } catch (const hqo::EigenSolverError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kEigensolver;
  } catch (const hqo::ResonanceError& e) {
    std::cerr << "error: resonance: " << e.what() << "\n";
    return kResonance;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
