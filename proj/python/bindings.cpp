// Python bindings for the navigation core. Structured values cross the
// boundary as plain dicts/lists (via the JSON forms) so the module stays thin.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <nlohmann/json.hpp>

#include "vlfly/controller.hpp"
#include "vlfly/error.hpp"
#include "vlfly/harness.hpp"
#include "vlfly/instruction.hpp"
#include "vlfly/model.hpp"
#include "vlfly/retrieval.hpp"
#include "vlfly/training.hpp"
#include "vlfly/world.hpp"

namespace py = pybind11;
using nlohmann::json;
using namespace vlfly;

namespace {

// Python-side values go through json.dumps / json.loads to avoid a
// hand-written converter for every nested type.
py::object to_py(const json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

json from_py(const py::handle& obj) {
  return json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::dict prompt_dict(const Prompt& p) {
  py::dict d;
  d["text"] = p.text;
  d["source"] = std::string(to_string(p.source));
  d["matched_item"] = p.matched_item ? py::cast(*p.matched_item) : py::none();
  return d;
}

std::vector<std::string> items_or_default(const std::optional<std::vector<std::string>>& items) {
  return items ? *items : default_items();
}

AffordanceTable table_or_builtin(const std::optional<std::map<std::string, std::string>>& table) {
  return table ? AffordanceTable(*table) : AffordanceTable::builtin();
}

py::dict metrics_dict(const Metrics& m) {
  py::dict d;
  d["SR"] = m.sr;
  d["OS"] = m.os;
  d["SPL"] = m.spl;
  d["NE"] = m.ne;
  d["N"] = m.n;
  return d;
}

}  // namespace

PYBIND11_MODULE(_vlfly, m) {
  m.doc() = "Vision-language UAV navigation workbench core";

  static py::exception<Error> vlfly_error(m, "VlflyError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(vlfly_error, e.structured().c_str());
    }
  });

  m.def("tokenize", [](const std::string& text) {
    const TokenSeq t = tokenize(text);
    return py::make_tuple(t.tokens, t.ids);
  }, py::arg("text"), "Lowercased word tokens and their FNV-1a 64 ids.");

  m.def("fnv1a64", &fnv1a64, py::arg("text"));

  m.def("encode_instruction",
        [](const std::string& instruction, std::optional<std::vector<std::string>> items,
           std::optional<std::map<std::string, std::string>> affordances) {
          return prompt_dict(encode_instruction(Instruction(instruction), items_or_default(items),
                                                table_or_builtin(affordances)));
        },
        py::arg("instruction"), py::arg("items") = py::none(), py::arg("affordances") = py::none());

  m.def("embed_text", [](const std::string& text, std::size_t dim) {
    const Embedding e = embed_text(tokenize(text), dim);
    return std::vector<float>(e.values().begin(), e.values().end());
  }, py::arg("text"), py::arg("dim") = 64);

  m.def("softmax", [](const std::vector<double>& scores) { return softmax(scores); }, py::arg("scores"));

  m.def("retrieve",
        [](const std::string& prompt, const std::vector<std::string>& descriptors, double logit_scale,
           std::size_t dim) {
          const GoalPool pool = make_descriptor_pool(descriptors, dim);
          const RetrievalResult r = retrieve({prompt, PromptSource::Passthrough, {}}, pool, {logit_scale, dim});
          py::dict d;
          d["scores"] = r.scores;
          d["probs"] = r.probs;
          d["best_index"] = r.best_index;
          d["best_id"] = r.best_id;
          return d;
        },
        py::arg("prompt"), py::arg("descriptors"), py::arg("logit_scale") = 100.0, py::arg("dim") = 64,
        "Scores a prompt against a pool built from descriptors with the hash embedder.");

  m.def("write_descriptor_pool",
        [](const std::vector<std::string>& descriptors, const std::filesystem::path& path, std::size_t dim) {
          write_pool(make_descriptor_pool(descriptors, dim), path);
        },
        py::arg("descriptors"), py::arg("path"), py::arg("dim") = 64);

  m.def("read_pool", [](const std::filesystem::path& path) {
    py::list out;
    for (const auto& e : read_pool(path)) {
      py::dict d;
      d["id"] = e.id;
      d["descriptor"] = e.descriptor;
      d["embedding"] = std::vector<float>(e.embedding.values().begin(), e.embedding.values().end());
      out.append(d);
    }
    return out;
  }, py::arg("path"));

  m.def("scale_waypoint", [](double x, double y, double v_max, double f_c) {
    const Vec2 d = scale_waypoint({x, y}, v_max, f_c);
    return py::make_tuple(d.x, d.y);
  }, py::arg("x"), py::arg("y"), py::arg("v_max") = 1.0, py::arg("f_c") = 15.0);

  m.def("step_dynamics", [](double x, double y, double heading, double v, double omega, double dt) {
    const Pose p = step_dynamics({x, y, heading}, {v, omega}, dt);
    return py::make_tuple(p.x, p.y, p.heading);
  }, py::arg("x"), py::arg("y"), py::arg("heading"), py::arg("v"), py::arg("omega"), py::arg("dt"));

  m.def("generate_scenario", [](const std::string& kind, std::uint64_t seed) {
    return to_py(to_json(generate_scenario(parse_scenario_kind(kind), seed)));
  }, py::arg("kind"), py::arg("seed"));

  m.def("run_episode",
        [](const std::string& kind, std::uint64_t seed, const std::string& planner, const std::string& instruction,
           py::object scenario, py::object config, bool bypass_prompting, py::object params_path, bool with_steps) {
          EpisodeConfig cfg;
          cfg.kind = parse_scenario_kind(kind);
          cfg.seed = seed;
          cfg.planner = parse_planner_kind(planner);
          cfg.instruction = instruction;
          cfg.bypass_prompting = bypass_prompting;
          if (!scenario.is_none()) cfg.scenario = scenario_from_json(from_py(scenario));
          cfg.sim = config.is_none() ? SimConfig{}.sync() : sim_config_from_json(from_py(config));
          if (!params_path.is_none()) cfg.params_path = params_path.cast<std::filesystem::path>();
          EpisodeLog log;
          {
            py::gil_scoped_release release;
            log = run_episode(cfg);
          }
          return to_py(to_json(log, with_steps));
        },
        py::arg("kind") = "box", py::arg("seed") = 0, py::arg("planner") = "oracle",
        py::arg("instruction") = "fly to the blue backpack", py::arg("scenario") = py::none(),
        py::arg("config") = py::none(), py::arg("bypass_prompting") = false, py::arg("params") = py::none(),
        py::arg("with_steps") = false);

  m.def("run_benchmark", [](py::object suite, const std::filesystem::path& base_dir) {
    const SuiteConfig cfg = suite_from_json(from_py(suite), base_dir);
    BenchmarkReport report;
    {
      py::gil_scoped_release release;
      report = run_benchmark(cfg);
    }
    return to_py(report.to_json());
  }, py::arg("suite"), py::arg("base_dir") = std::filesystem::path("."));

  m.def("compute_metrics", [](const std::vector<py::dict>& episodes, double delta) {
    std::vector<EpisodeLog> logs;
    for (const auto& e : episodes) {
      EpisodeLog log;
      const std::string outcome = e["outcome"].cast<std::string>();
      log.outcome = outcome == "success"     ? EpisodeStatus::Success
                    : outcome == "collision" ? EpisodeStatus::Collision
                                             : EpisodeStatus::Timeout;
      log.shortest_path = e["shortest_path"].cast<double>();
      log.path_length = e["path_length"].cast<double>();
      log.min_goal_distance = e["min_goal_distance"].cast<double>();
      log.final_goal_distance = e["final_goal_distance"].cast<double>();
      logs.push_back(std::move(log));
    }
    return metrics_dict(compute_metrics(logs, delta));
  }, py::arg("episodes"), py::arg("delta") = 0.5,
     "Metrics from episode summaries as returned by run_episode.");

  m.def("gradient_check", [](std::uint64_t seed) {
    GradcheckConfig cfg;
    cfg.seed = seed;
    const GradcheckReport r = gradient_check(cfg);
    py::dict d;
    d["checked"] = r.checked;
    d["max_rel_error"] = r.max_rel_error;
    d["worst_tensor"] = r.worst_tensor;
    return d;
  }, py::arg("seed") = 7);
}
