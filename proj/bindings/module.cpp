#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "passlab/config.hpp"
#include "passlab/corpus.hpp"
#include "passlab/estimator.hpp"
#include "passlab/harness.hpp"
#include "passlab/metrics.hpp"
#include "passlab/policy.hpp"
#include "passlab/probe.hpp"
#include "passlab/reward.hpp"
#include "passlab/trainer.hpp"

namespace py = pybind11;
using namespace passlab;

PYBIND11_MODULE(_passlab, m) {
  m.doc() = "Exact-policy laboratory for reward design in critic-free RL";

  py::enum_<Mode>(m, "Mode")
      .value("FULL", Mode::Full)
      .value("HELPFUL", Mode::Helpful)
      .value("HARMFUL", Mode::Harmful)
      .value("OTHER", Mode::Other);

  py::class_<Candidate>(m, "Candidate")
      .def_readonly("tokens", &Candidate::tokens)
      .def_readonly("pass_vector", &Candidate::pass)
      .def_readonly("mode", &Candidate::mode);

  py::class_<Task>(m, "Task")
      .def_readonly("id", &Task::id)
      .def_readonly("test_count", &Task::test_count)
      .def_readonly("vocab_size", &Task::vocab_size)
      .def_readonly("seq_len", &Task::seq_len)
      .def_readonly("programs", &Task::programs)
      .def_readonly("reference_ids", &Task::reference_ids)
      .def("find_candidate", &Task::find_candidate);

  py::class_<Corpus>(m, "Corpus")
      .def_readonly("name", &Corpus::name)
      .def_readonly("seed", &Corpus::seed)
      .def_readonly("tasks", &Corpus::tasks);

  m.def("evaluate", &evaluate, py::arg("task"), py::arg("candidate_index"));
  m.def("pass_rate", &pass_rate);
  m.def("gen_easy_corpus", &gen_easy_corpus, py::arg("n_tasks"), py::arg("tests"),
        py::arg("seed"), py::arg("correlation") = 0.0);
  m.def("gen_conflict_corpus", &gen_conflict_corpus, py::arg("n_tasks"),
        py::arg("tests"), py::arg("harmful_pass_fraction"), py::arg("seed"));
  m.def("save_corpus", &save_corpus);
  m.def("load_corpus", &load_corpus);

  py::class_<Policy>(m, "Policy")
      .def_static("uniform_init", &Policy::uniform_init, py::arg("corpus"),
                  py::arg("temperature") = 1.0)
      .def_static("biased_init", &Policy::biased_init, py::arg("corpus"),
                  py::arg("boost"), py::arg("temperature") = 1.0)
      .def("log_prob", &Policy::log_prob)
      .def("grad_log_prob", &Policy::grad_log_prob)
      .def("sample", &Policy::sample)
      .def("apply_update", &Policy::apply_update)
      .def("save", &Policy::save)
      .def_static("load", &Policy::load);

  py::class_<GradientVector>(m, "GradientVector")
      .def("dot", &GradientVector::dot)
      .def("scale", &GradientVector::scale);

  m.def("binary_reward", &binary_reward);
  m.def("pass_rate_reward", &pass_rate_reward);
  m.def("reweighted_reward", &reweighted_reward);

  py::enum_<Method>(m, "Method").value("GRPO", Method::Grpo).value("RLOO", Method::Rloo);

  py::class_<AdvantageGroup>(m, "AdvantageGroup")
      .def_readonly("rewards", &AdvantageGroup::rewards)
      .def_readonly("advantages", &AdvantageGroup::advantages)
      .def_readonly("mean", &AdvantageGroup::mean)
      .def_readonly("stddev", &AdvantageGroup::stddev);

  m.def("grpo_advantages", &grpo_advantages, py::arg("rewards"),
        py::arg("epsilon") = 1e-4);
  m.def("rloo_advantages", &rloo_advantages);
  m.def("pass_at_k", &pass_at_k, py::arg("n"), py::arg("c"), py::arg("k"));
  m.def("adaptive_timeout",
        [](double multiplier, double t_min, double t_max,
           std::optional<double> canonical) {
          TimeoutPolicy p{multiplier, t_min, t_max, canonical};
          return adaptive_timeout(p);
        },
        py::arg("multiplier") = 3.0, py::arg("t_min") = 10.0, py::arg("t_max") = 30.0,
        py::arg("canonical_runtime") = std::nullopt);

  py::enum_<ProbeCondition>(m, "ProbeCondition")
      .value("PASS_RATE_WITHOUT_FULL", ProbeCondition::PassRateWithoutFull)
      .value("PASS_RATE_WITH_FULL", ProbeCondition::PassRateWithFull)
      .value("BINARY_WITHOUT_FULL", ProbeCondition::BinaryWithoutFull)
      .value("BINARY_WITH_FULL", ProbeCondition::BinaryWithFull);

  py::class_<ProbeConfig>(m, "ProbeConfig")
      .def(py::init<>())
      .def_readwrite("eta", &ProbeConfig::eta)
      .def_readwrite("condition", &ProbeConfig::condition)
      .def_readwrite("length_normalize", &ProbeConfig::length_normalize)
      .def_readwrite("method", &ProbeConfig::method);

  py::class_<ProbeReport>(m, "ProbeReport")
      .def_readonly("task_id", &ProbeReport::task_id)
      .def_readonly("delta_grp", &ProbeReport::delta_grp)
      .def_readonly("delta_i", &ProbeReport::delta_i)
      .def_readonly("advantages", &ProbeReport::advantages)
      .def_readonly("rewards", &ProbeReport::rewards);

  m.def("group_probe", &group_probe);
  m.def("sample_probe", &sample_probe);
}
