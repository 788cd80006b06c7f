// Copyright 2026 The switchconv Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <memory>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "switchconv/checkpoint.h"
#include "switchconv/config.h"
#include "switchconv/corpus.h"
#include "switchconv/decoding.h"
#include "switchconv/errors.h"
#include "switchconv/harness.h"
#include "switchconv/metrics.h"

namespace py = pybind11;
namespace sc = switchconv;

namespace {

// A checkpoint loaded for decoding, optionally paired with a dedicated
// punctuation model for cascades.
class Decoder {
 public:
  Decoder(const std::filesystem::path& checkpoint,
          const std::optional<std::filesystem::path>& secondary) {
    const sc::Checkpoint ck = sc::load_checkpoint(checkpoint);
    kind_ = ck.model_kind;
    primary_ = std::make_unique<sc::Converter>(sc::to_model(ck));
    if (secondary) {
      const sc::Checkpoint ck2 = sc::load_checkpoint(*secondary, &ck.vocab);
      secondary_ = std::make_unique<sc::Converter>(sc::to_model(ck2));
    }
  }

  std::vector<std::string> convert(const std::vector<std::string>& lines,
                                   const std::string& mode, int beam, int max_len) {
    sc::DecodeConfig dc;
    dc.beam_size = beam;
    dc.max_len = max_len;
    dc.validate();
    const auto fn = sc::make_text_converter(*primary_, secondary_.get(),
                                            sc::parse_decode_mode(mode), dc);
    py::gil_scoped_release release;
    std::vector<std::string> out;
    out.reserve(lines.size());
    for (const auto& line : lines) out.push_back(fn(line));
    return out;
  }

  int64_t passes() const {
    return primary_->passes() + (secondary_ ? secondary_->passes() : 0);
  }
  const std::string& kind() const { return kind_; }
  size_t params() const { return primary_->model().params.parameter_count(); }

 private:
  std::string kind_;
  std::unique_ptr<sc::Converter> primary_;
  std::unique_ptr<sc::Converter> secondary_;
};

using Lines = std::vector<std::string>;

std::vector<sc::Tokens> tokenize_all(const Lines& lines, sc::Granularity g) {
  std::vector<sc::Tokens> out;
  out.reserve(lines.size());
  for (const auto& l : lines) out.push_back(sc::tokenize(l, g));
  return out;
}

sc::ExperimentConfig config_from(const std::string& json_text) {
  return sc::experiment_config_from_json(sc::parse_json_text(json_text, "<python>"));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Switching-token spoken-text conversion";
  sc::tune_allocator();

  py::register_exception<sc::Error>(m, "Error", PyExc_RuntimeError);

  py::class_<sc::VariantSet>(m, "VariantSet")
      .def_readonly("spoken", &sc::VariantSet::spoken)
      .def_readonly("disf_target", &sc::VariantSet::disf_target)
      .def_readonly("punc_target", &sc::VariantSet::punc_target)
      .def_readonly("joint_target", &sc::VariantSet::joint_target);

  m.def(
      "generate_variants",
      [](size_t n, uint64_t seed) {
        sc::CorpusConfig cfg = sc::CorpusConfig::desk_default();
        cfg.seed = seed;
        return sc::generate_variants(cfg, n);
      },
      py::arg("n"), py::arg("seed") = 7);
  m.def(
      "desk_fillers",
      [] { return sc::CorpusConfig::desk_default().filler_inventory; });
  m.def(
      "remove_disfluencies",
      [](const std::string& text, const std::vector<std::string>& fillers) {
        return sc::remove_disfluencies(text, fillers);
      },
      py::arg("text"), py::arg("fillers"));

  m.def(
      "tokenize",
      [](const std::string& text, const std::string& granularity) {
        return sc::tokenize(text, sc::parse_granularity(granularity));
      },
      py::arg("text"), py::arg("granularity") = "word");
  m.def(
      "bleu",
      [](const Lines& refs, const Lines& hyps, const std::string& granularity, int max_n) {
        const auto g = sc::parse_granularity(granularity);
        return sc::bleu(tokenize_all(refs, g), tokenize_all(hyps, g), max_n);
      },
      py::arg("references"), py::arg("hypotheses"), py::arg("granularity") = "word",
      py::arg("max_n") = 4);
  m.def(
      "gleu",
      [](const Lines& srcs, const Lines& refs, const Lines& hyps,
         const std::string& granularity, int max_n) {
        const auto g = sc::parse_granularity(granularity);
        return sc::gleu(tokenize_all(srcs, g), tokenize_all(refs, g),
                        tokenize_all(hyps, g), max_n);
      },
      py::arg("sources"), py::arg("references"), py::arg("hypotheses"),
      py::arg("granularity") = "word", py::arg("max_n") = 4);
  m.def(
      "meteor",
      [](const Lines& refs, const Lines& hyps, const std::string& granularity) {
        const auto g = sc::parse_granularity(granularity);
        return sc::meteor_corpus(tokenize_all(refs, g), tokenize_all(hyps, g));
      },
      py::arg("references"), py::arg("hypotheses"), py::arg("granularity") = "word");
  m.def(
      "score",
      [](const std::vector<std::string>& sources, const std::vector<std::string>& refs,
         const std::vector<std::string>& hyps, const std::string& granularity) {
        const sc::ScoreTriple s =
            sc::score_corpus(sources, refs, hyps, sc::parse_granularity(granularity));
        py::dict d;
        d["bleu"] = s.bleu;
        d["meteor"] = s.meteor;
        d["gleu"] = s.gleu;
        d["exact_match"] = sc::exact_match_rate(refs, hyps);
        return d;
      },
      py::arg("sources"), py::arg("references"), py::arg("hypotheses"),
      py::arg("granularity") = "word");

  py::class_<Decoder>(m, "Decoder")
      .def(py::init<const std::filesystem::path&,
                    const std::optional<std::filesystem::path>&>(),
           py::arg("checkpoint"), py::arg("secondary") = py::none())
      .def("convert", &Decoder::convert, py::arg("lines"), py::arg("mode") = "joint",
           py::arg("beam") = 4, py::arg("max_len") = 160)
      .def_property_readonly("passes", &Decoder::passes)
      .def_property_readonly("kind", &Decoder::kind)
      .def_property_readonly("params", &Decoder::params);

  m.def(
      "run_experiment",
      [](const std::string& config_json) {
        const sc::ExperimentConfig cfg = config_from(config_json);
        sc::EvalReport report;
        {
          py::gil_scoped_release release;
          report = sc::run_experiment(cfg);
        }
        return sc::render_report(report, sc::ReportFormat::kCsv);
      },
      py::arg("config_json"),
      "Runs an experiment from a JSON config and returns the CSV report.");
}
