#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cpcp/certificate.hpp"
#include "cpcp/errors.hpp"
#include "cpcp/instance.hpp"
#include "cpcp/lemmas.hpp"
#include "cpcp/linalg.hpp"
#include "cpcp/solver.hpp"
#include "cpcp/subspace.hpp"

namespace py = pybind11;
using namespace cpcp;

namespace {

// Span bases cross the boundary as a list of m x n arrays.
SpanBasis to_basis(const std::vector<Matrix>& elements, Index m, Index n) {
  if (elements.empty()) return SpanBasis(m, n);
  return SpanBasis::from_elements(elements);
}

SupportSet to_support(const Mask& mask) { return SupportSet(mask); }

py::dict solver_result(const SolverResult& r) {
  py::dict d;
  d["L"] = r.L_hat;
  d["S"] = r.S_hat;
  d["status"] = to_string(r.status);
  d["iters"] = r.iters;
  d["objective"] = r.objective;
  d["primal_residual"] = r.primal_residual;
  d["lambda"] = r.lambda;
  py::list trace;
  for (const auto& t : r.trace) trace.append(py::make_tuple(t.iter, t.primal_residual, t.objective));
  d["trace"] = trace;
  return d;
}

SolverOptions solver_opts(std::optional<double> lambda, double tol, int max_iters, bool trace) {
  SolverOptions o;
  o.lambda = lambda;
  o.tol_primal = tol;
  o.tol_change = tol;
  o.max_iters = max_iters;
  o.record_trace = trace;
  return o;
}

}  // namespace

PYBIND11_MODULE(_cpcp, mod) {
  mod.doc() = "Compressive principal component pursuit: solver, instances and certificates";

  auto base = py::register_exception<Error>(mod, "CpcpError", PyExc_RuntimeError);
  py::register_exception<NumericalError>(mod, "NumericalError", base.ptr());
  py::register_exception<DegenerateSum>(mod, "DegenerateSum", base.ptr());
  py::register_exception<PremiseViolation>(mod, "PremiseViolation", base.ptr());
  py::register_exception<RankDeficient>(mod, "RankDeficient", base.ptr());
  py::register_exception<IoError>(mod, "IoError", base.ptr());
  py::register_exception<ConfigError>(mod, "ConfigError", base.ptr());

  // Linear algebra
  mod.def("svt", py::overload_cast<const Matrix&, double>(&svt), py::arg("a"), py::arg("tau"));
  mod.def("soft_threshold", &soft_threshold, py::arg("a"), py::arg("tau"));
  mod.def("singular_values", &singular_values, py::arg("a"));

  // Subspaces
  py::class_<Subspace>(mod, "Subspace")
      .def_static("tangent", [](const Matrix& u, const Matrix& v) {
        return Subspace::tangent(TangentSpace(u, v));
      }, py::arg("U"), py::arg("V"))
      .def_static("support", [](const Mask& mask) { return Subspace::support(to_support(mask)); },
                  py::arg("mask"))
      .def_static("span", [](const std::vector<Matrix>& elements) {
        return Subspace::span(SpanBasis::from_elements(elements));
      }, py::arg("elements"))
      .def_static("direct_sum", &Subspace::direct_sum, py::arg("a"), py::arg("b"))
      .def("complement", &Subspace::complement)
      .def("apply", &Subspace::apply, py::arg("x"))
      .def_property_readonly("shape", [](const Subspace& s) {
        return py::make_tuple(s.rows(), s.cols());
      });
  mod.def("op_norm_product", [](const Subspace& a, const Subspace& b) {
    return op_norm_product(a, b).value;
  }, py::arg("a"), py::arg("b"), "||P_A P_B||");
  mod.def("coherence_mu", [](const Matrix& u, const Matrix& v) {
    return coherence_mu(TangentSpace(u, v));
  }, py::arg("U"), py::arg("V"));
  mod.def("nu_coherence", [](const std::vector<Matrix>& elements) {
    return nu_coherence(SpanBasis::from_elements(elements));
  }, py::arg("elements"));
  mod.def("gamma_constrained", [](const Subspace& s) { return gamma_constrained(s).value; },
          py::arg("subspace"));

  // Instances
  py::class_<ProblemInstance>(mod, "Instance")
      .def_readonly("D", &ProblemInstance::D)
      .def_readonly("L0", &ProblemInstance::L0)
      .def_readonly("S0", &ProblemInstance::S0)
      .def_readonly("seed", &ProblemInstance::seed)
      .def_readonly("magnitude", &ProblemInstance::magnitude)
      .def_property_readonly("omega", [](const ProblemInstance& i) { return i.omega.mask(); })
      .def_property_readonly("qperp", [](const ProblemInstance& i) { return i.qperp.elements(); })
      .def_property_readonly("U", [](const ProblemInstance& i) { return i.T.U(); })
      .def_property_readonly("V", [](const ProblemInstance& i) { return i.T.V(); })
      .def_property_readonly("shape", [](const ProblemInstance& i) {
        return py::make_tuple(i.params.m, i.params.n);
      })
      .def_property_readonly("independent", [](const ProblemInstance& i) {
        return i.verdicts.all_independent();
      })
      .def("params_json", &bundle_params_json);

  mod.def("generate", [](Index m, Index n, Index r, double rho, Index p, std::uint64_t seed,
                         const std::string& qmodel, std::optional<double> magnitude) {
    GenParams g;
    g.m = m;
    g.n = n;
    g.r = r;
    g.rho = rho;
    g.p = p;
    g.qmodel = parse_qmodel(qmodel);
    g.magnitude = magnitude;
    py::gil_scoped_release release;
    return assemble(g, seed);
  }, py::arg("m"), py::arg("n"), py::arg("r"), py::arg("rho"), py::arg("p"),
     py::arg("seed") = 0, py::arg("qmodel") = "random", py::arg("magnitude") = py::none());
  mod.def("write_bundle", &write_bundle, py::arg("dir"), py::arg("instance"));
  mod.def("read_bundle", &read_bundle, py::arg("dir"));
  mod.def("basis_from_jacobians", [](const std::vector<Matrix>& jac) {
    return basis_from_jacobians(jac).elements();
  }, py::arg("jacobians"));

  // Solvers
  mod.def("solve_cpcp", [](const Matrix& d, const std::vector<Matrix>& qperp,
                           std::optional<double> lambda, double tol, int max_iters, bool trace) {
    const SpanBasis basis = to_basis(qperp, d.rows(), d.cols());
    const SolverOptions o = solver_opts(lambda, tol, max_iters, trace);
    SolverResult r;
    {
      py::gil_scoped_release release;
      r = solve_cpcp(d, basis, o);
    }
    return solver_result(r);
  }, py::arg("D"), py::arg("qperp") = std::vector<Matrix>{}, py::arg("lam") = py::none(),
     py::arg("tol") = 1e-7, py::arg("max_iters") = 1000, py::arg("trace") = false);
  mod.def("solve_pcp", [](const Matrix& d, std::optional<double> lambda, double tol,
                          int max_iters, bool trace) {
    const SolverOptions o = solver_opts(lambda, tol, max_iters, trace);
    SolverResult r;
    {
      py::gil_scoped_release release;
      r = solve_pcp(d, o);
    }
    return solver_result(r);
  }, py::arg("D"), py::arg("lam") = py::none(), py::arg("tol") = 1e-7,
     py::arg("max_iters") = 1000, py::arg("trace") = false);
  mod.def("oracle_solve", [](const Matrix& d, const std::vector<Matrix>& qperp, double lambda,
                             double tol) {
    const OracleResult r = oracle_solve(d, to_basis(qperp, d.rows(), d.cols()), lambda, tol);
    py::dict out;
    out["L"] = r.L;
    out["S"] = r.S;
    out["objective"] = r.objective;
    out["residual"] = r.residual;
    out["iterations"] = r.iterations;
    return out;
  }, py::arg("D"), py::arg("qperp"), py::arg("lam"), py::arg("tol") = 1e-8);
  mod.def("default_lambda", &default_lambda, py::arg("m"));

  // Certificates. The report comes back as its JSON text plus the matrices.
  mod.def("certify", [](const ProblemInstance& inst, std::optional<double> lambda, double tol,
                        std::uint64_t schedule_seed) {
    CertifyOptions o;
    o.lambda = lambda;
    o.tol = tol;
    o.schedule_seed = schedule_seed;
    CertificateReport rep;
    {
      py::gil_scoped_release release;
      rep = certify(inst, o);
    }
    py::dict out;
    out["report"] = rep.to_json();
    out["verdict"] = rep.verdict;
    out["W"] = rep.W;
    out["WL"] = rep.WL;
    out["WS"] = rep.WS;
    out["WQ"] = rep.WQ;
    return out;
  }, py::arg("instance"), py::arg("lam") = py::none(), py::arg("tol") = 1e-10,
     py::arg("schedule_seed") = 0);
  mod.def("check_premises", [](const ProblemInstance& inst) {
    return check_premises(inst.T, inst.omega, inst.qperp).to_json();
  }, py::arg("instance"));
  mod.def("golfing_depth", &golfing_depth, py::arg("m"));
  mod.def("golfing_rate", &golfing_rate, py::arg("rho"), py::arg("j0"));

  // Empirical inequality checks
  mod.def("lemma_check_names", &lemma_check_names);
  mod.def("run_lemma_check", [](const std::string& name, Index m, Index n, Index r, Index p,
                                double rho, int seeds, int trials, std::uint64_t seed) {
    LemmaSetup s;
    s.m = m;
    s.n = n;
    s.r = r;
    s.p = p;
    s.rho = rho;
    s.seeds = seeds;
    s.trials = trials;
    s.seed = seed;
    LemmaCheck c;
    {
      py::gil_scoped_release release;
      c = run_check(name, s);
    }
    return lemma_report_json({c}, s);
  }, py::arg("name"), py::arg("m") = 100, py::arg("n") = 100, py::arg("r") = 3,
     py::arg("p") = 5, py::arg("rho") = 0.05, py::arg("seeds") = 20, py::arg("trials") = 200,
     py::arg("seed") = 0);
}
