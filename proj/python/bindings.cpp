#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/iostream.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "prodwave/cli.hpp"
#include "prodwave/evolution.hpp"
#include "prodwave/quasimode.hpp"

namespace py = pybind11;
using namespace prodwave;

namespace {

py::dict fit_dict(const std::optional<PowerLawFit>& fit)
{
    py::dict d;
    if (fit) {
        d["slope"] = fit->slope;
        d["intercept"] = fit->intercept;
        d["r_squared"] = fit->r_squared;
        d["points"] = fit->points;
    }
    return d;
}

py::dict sweep_dict(const SweepResult& r)
{
    std::vector<double> parameter;
    std::vector<double> z;
    std::vector<double> ratio;
    std::vector<std::string> kind;
    for (const auto& row : r.rows) {
        parameter.push_back(row.parameter);
        z.push_back(row.z);
        ratio.push_back(row.worst_ratio);
        kind.emplace_back(1, row.kind);
    }
    py::dict d;
    d["parameter"] = parameter;
    d["z"] = z;
    d["worst_ratio"] = ratio;
    d["argmax_kind"] = kind;
    d["parameters"] = r.parameters;
    d["parameter_max"] = r.parameter_max;
    d["fit"] = fit_dict(r.fit);
    d["max_ratio"] = r.max_ratio;
    d["argmax"] = r.argmax_parameter;
    d["spread"] = r.max_ratio / r.min_of_parameter_max;
    return d;
}

ProfileSpec make_spec(const std::string& family, double p, int n_modes, int mode, const std::string& x_profile,
                      const std::optional<std::string>& v_profile, bool certification)
{
    const XProfile u = XProfile::parse(x_profile);
    std::optional<XProfile> v;
    if (v_profile) {
        v = XProfile::parse(*v_profile);
    }
    ProfileSpec spec;
    if (family == "single_mode") {
        spec = ProfileSpec::single_mode(mode, u, v);
    } else if (family == "power_law") {
        spec = ProfileSpec::power_law(p, n_modes, u);
        spec.v_profile = v;
    } else {
        throw InvalidInput("family must be 'single_mode' or 'power_law'");
    }
    spec.certification = certification;
    return spec;
}

} // namespace

PYBIND11_MODULE(_core, m)
{
    m.doc() = "Transverse impedance resolvents and boundary-damped wave decay";

    auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
    py::register_exception<SingularSystem>(m, "SingularSystem", error.ptr());
    py::register_exception<NearSingular>(m, "NearSingular", error.ptr());
    py::register_exception<MarginExhausted>(m, "MarginExhausted", error.ptr());
    py::register_exception<DiscretizationInconsistency>(m, "DiscretizationInconsistency", error.ptr());
    py::register_exception<SolverFailure>(m, "SolverFailure", error.ptr());

    m.def("set_max_threads", &set_max_threads, py::arg("threads"));

    py::class_<DampingProfile>(m, "DampingProfile")
        .def(py::init<>())
        .def(py::init([](double a0_left, double a0_right, double b0_left, double b0_right, double a_left,
                         double a_right, double b_left, double b_right, double c0) {
                 return DampingProfile{a0_left, a0_right, b0_left, b0_right, a_left, a_right, b_left, b_right, c0};
             }),
             py::kw_only(), py::arg("a0_left") = 1.0, py::arg("a0_right") = 1.0, py::arg("b0_left") = 0.0,
             py::arg("b0_right") = 0.0, py::arg("a_left") = 1.0, py::arg("a_right") = 1.0, py::arg("b_left") = 0.0,
             py::arg("b_right") = 0.0, py::arg("c0") = 1.0)
        .def_static("uniform", &DampingProfile::uniform)
        .def_readwrite("a0_left", &DampingProfile::a0_left)
        .def_readwrite("a0_right", &DampingProfile::a0_right)
        .def_readwrite("b0_left", &DampingProfile::b0_left)
        .def_readwrite("b0_right", &DampingProfile::b0_right)
        .def_readwrite("a_left", &DampingProfile::a_left)
        .def_readwrite("a_right", &DampingProfile::a_right)
        .def_readwrite("b_left", &DampingProfile::b_left)
        .def_readwrite("b_right", &DampingProfile::b_right)
        .def_readwrite("c0", &DampingProfile::c0)
        .def("validate", &DampingProfile::validate)
        .def("b0_comparable", &DampingProfile::b0_comparable);

    py::class_<CrossSection>(m, "CrossSection")
        .def(py::init<int>(), py::arg("n_cells"))
        .def_property_readonly("n_cells", &CrossSection::n_cells)
        .def_property_readonly("h", &CrossSection::h)
        .def_property_readonly("nodes", &CrossSection::nodes)
        .def_property_readonly("mass_weights", &CrossSection::mass_weights)
        .def("gradient_energy", &CrossSection::gradient_energy, py::arg("u"))
        .def("laplacian", &CrossSection::laplacian, py::arg("u"));
    m.def("build_cross_section", &build_cross_section, py::arg("n_cells"), py::arg("damping"));

    py::class_<TransverseModel>(m, "TransverseModel")
        .def_static("circle", &TransverseModel::circle, py::arg("length") = 2.0 * M_PI)
        .def_static("torus", &TransverseModel::torus, py::arg("lengths"))
        .def_static("interval", &TransverseModel::interval, py::arg("length"), py::arg("dirichlet"))
        .def_static("explicit_values", &TransverseModel::explicit_values, py::arg("eta"))
        .def("describe", &TransverseModel::describe)
        .def("__repr__", &TransverseModel::describe);

    m.def(
        "transverse_eigenvalues",
        [](const TransverseModel& model, double eta_max) {
            std::vector<std::pair<double, int>> out;
            for (const auto& v : transverse_eigenvalues(model, eta_max)) {
                out.emplace_back(v.eta, v.multiplicity);
            }
            return out;
        },
        py::arg("model"), py::arg("eta_max"), "List of (eta, multiplicity) with eta <= eta_max.");

    py::class_<SpectralWindow>(m, "SpectralWindow")
        .def_readonly("center", &SpectralWindow::center)
        .def_readonly("half_width", &SpectralWindow::half_width)
        .def("contains", &SpectralWindow::contains);
    m.def("window_cover", &window_cover, py::arg("lam"), py::arg("delta"), py::arg("epsilon"), py::arg("eta_max"));
    m.def("cover_multiplicity", &cover_multiplicity, py::arg("cover"), py::arg("eta"));

    m.def(
        "solve_impedance",
        [](const CrossSection& disc, const DampingProfile& damping, double lam, double z, const ComplexVector& f,
           Complex g_left, Complex g_right, bool include_perturbation) {
            ImpedanceProblem p{lam, z, include_perturbation, f, g_left, g_right};
            return solve_impedance(disc, damping, p);
        },
        py::arg("disc"), py::arg("damping"), py::arg("lam"), py::arg("z"), py::arg("f"), py::arg("g_left") = 0.0,
        py::arg("g_right") = 0.0, py::arg("include_perturbation") = false);
    m.def(
        "impedance_resolvent_norm",
        [](const CrossSection& disc, const DampingProfile& damping, double mu, double delta, double mu0,
           bool include_perturbation) {
            return impedance_resolvent_norm(disc, damping, mu, delta, {mu0, include_perturbation});
        },
        py::arg("disc"), py::arg("damping"), py::arg("mu"), py::arg("delta") = 0.0, py::arg("mu0") = 1.0,
        py::arg("include_perturbation") = false);
    m.def(
        "sweep_impedance",
        [](const CrossSection& disc, const DampingProfile& damping, const std::vector<double>& mu, double delta,
           double mu0, bool include_perturbation) {
            return sweep_dict(sweep_impedance(disc, damping, mu, delta, {mu0, include_perturbation}));
        },
        py::arg("disc"), py::arg("damping"), py::arg("mu"), py::arg("delta") = 0.0, py::arg("mu0") = 1.0,
        py::arg("include_perturbation") = false);
    m.def(
        "overdamped_sweep",
        [](const CrossSection& disc, const DampingProfile& damping, const std::vector<double>& lam,
           const std::string& z_rule, double delta, double lambda0, bool include_perturbation) {
            OverdampedOptions options;
            options.lambda0 = lambda0;
            options.include_perturbation = include_perturbation;
            return sweep_dict(overdamped_sweep(disc, damping, lam, ZRule::parse(z_rule), delta, options));
        },
        py::arg("disc"), py::arg("damping"), py::arg("lam"), py::arg("z_rule") = "-50, 0, 0.5*l2, l2",
        py::arg("delta") = 0.0, py::arg("lambda0") = 1.0, py::arg("include_perturbation") = true);

    py::class_<ModeGenerator>(m, "ModeGenerator")
        .def_property_readonly("eta_sq", &ModeGenerator::eta_sq)
        .def_property_readonly("state_size", &ModeGenerator::state_size)
        .def_property_readonly("constraint_active", &ModeGenerator::constraint_active)
        .def("apply", &ModeGenerator::apply, py::arg("state"))
        .def("energy_norm_sq", &ModeGenerator::energy_norm_sq, py::arg("state"))
        .def("constraint", &ModeGenerator::constraint, py::arg("state"))
        .def("reduced", [](const ModeGenerator& g) { return Eigen::MatrixXd(g.reduced()); });
    m.def("assemble_mode_generator", &assemble_mode_generator, py::arg("disc"), py::arg("damping"),
          py::arg("eta_sq"));
    m.def(
        "mode_spectrum", [](const ModeGenerator& gen) { return mode_spectrum(gen).eigenvalues; }, py::arg("gen"));
    m.def("mode_resolvent_norm", &mode_resolvent_norm, py::arg("gen"), py::arg("lam"));
    m.def(
        "product_resolvent_norm",
        [](const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping, double lam) {
            const ProductNorm p = product_resolvent_norm(model, disc, damping, lam);
            py::dict d;
            d["norm"] = p.norm;
            d["argmax_eta"] = p.argmax_eta;
            d["margin"] = p.margin;
            d["modes_checked"] = p.modes_checked;
            return d;
        },
        py::arg("model"), py::arg("disc"), py::arg("damping"), py::arg("lam"));
    m.def(
        "resolvent_sweep",
        [](const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping,
           const std::vector<double>& lam, bool resolve_peaks) {
            ResolventSweepOptions options;
            options.resolve_peaks = resolve_peaks;
            const ResolventSweep s = resolvent_sweep(model, disc, damping, lam, options);
            std::vector<double> norm;
            std::vector<double> envelope;
            for (const auto& row : s.rows) {
                norm.push_back(row.product_norm);
                envelope.push_back(row.envelope);
            }
            py::dict d;
            d["lam"] = lam;
            d["product_norm"] = norm;
            d["envelope"] = envelope;
            d["pointwise_fit"] = fit_dict(s.pointwise_fit);
            d["envelope_fit"] = fit_dict(s.envelope_fit);
            return d;
        },
        py::arg("model"), py::arg("disc"), py::arg("damping"), py::arg("lam"), py::arg("resolve_peaks") = true);

    m.def("cayley_step", py::overload_cast<const ModeGenerator&, const ComplexVector&, double>(&step),
          py::arg("gen"), py::arg("state"), py::arg("dt"));
    m.def(
        "evolve",
        [](const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping,
           const std::string& family, double p, int n_modes, int mode, const std::string& x_profile,
           const std::optional<std::string>& v_profile, bool certification, double t_final, double dt,
           int sample_stride) {
            const auto spec = make_spec(family, p, n_modes, mode, x_profile, v_profile, certification);
            const ModalInitialData data = make_initial_data(model, disc, damping, spec);
            const EnergyTrace trace = evolve(model, disc, damping, data, t_final, dt, {sample_stride, false});
            py::dict d;
            d["times"] = trace.times;
            d["energy"] = trace.energy;
            d["e_norm"] = trace.e_norm;
            d["max_relative_growth"] = trace.max_relative_growth;
            d["max_ledger_defect"] = trace.max_ledger_defect;
            d["max_constraint_drift"] = trace.max_constraint_drift;
            d["h2_surrogate"] = data.sobolev.h2_surrogate;
            return d;
        },
        py::arg("model"), py::arg("disc"), py::arg("damping"), py::kw_only(), py::arg("family") = "power_law",
        py::arg("p") = 2.6, py::arg("n_modes") = 48, py::arg("mode") = 0, py::arg("x_profile") = "bump",
        py::arg("v_profile") = py::none(), py::arg("certification") = false, py::arg("t_final"), py::arg("dt"),
        py::arg("sample_stride") = 1);
    m.def(
        "fit_decay_exponent",
        [](const std::vector<double>& times, const std::vector<double>& energy, double t_lo, double t_hi,
           double delta) {
            const DecayFit f = fit_decay_exponent(times, energy, t_lo, t_hi, delta);
            py::dict d;
            d["exponent"] = f.exponent;
            d["r_squared"] = f.r_squared;
            d["sup_ratio"] = f.sup_ratio;
            d["spread"] = f.spread;
            d["samples"] = f.samples;
            return d;
        },
        py::arg("times"), py::arg("energy"), py::arg("t_lo"), py::arg("t_hi"), py::arg("delta") = 0.0);

    m.def(
        "build_quasimode_family",
        [](const TransverseModel& model, const CrossSection& disc, const DampingProfile& damping, int n,
           const std::vector<int>& k_list) {
            const QuasimodeReport r = build_quasimode_family(model, disc, damping, n, k_list);
            std::vector<double> lambda;
            std::vector<double> residual;
            std::vector<double> norm;
            for (const auto& e : r.entries) {
                lambda.push_back(e.lambda);
                residual.push_back(e.residual);
                norm.push_back(e.resolvent_norm);
            }
            const LowerBoundCheck check = verify_lower_bound(r);
            py::dict d;
            d["lam"] = lambda;
            d["residual"] = residual;
            d["resolvent_norm"] = norm;
            d["residual_fit"] = fit_dict(r.residual_fit);
            d["norm_fit"] = fit_dict(r.norm_fit);
            d["min_product"] = check.min_product;
            d["conclusion"] = check.conclusion;
            return d;
        },
        py::arg("model"), py::arg("disc"), py::arg("damping"), py::arg("n"), py::arg("k_list"));

    m.def(
        "predict_rate",
        [](double delta) {
            const RatePrediction r = predict_rate(delta);
            return py::make_tuple(r.rate_exponent, r.provenance);
        },
        py::arg("delta"), "Returns (rate_exponent, provenance).");
    m.def(
        "run_cli",
        [](std::vector<std::string> args) {
            args.insert(args.begin(), "prodwave");
            py::scoped_ostream_redirect guard;
            return run(args, std::cout, std::cerr);
        },
        py::arg("args"), "Runs the command line front end and returns its exit code.");
}
