#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "enzygen/checkpoint.hpp"
#include "enzygen/data.hpp"
#include "enzygen/errors.hpp"
#include "enzygen/generate.hpp"
#include "enzygen/geometry.hpp"
#include "enzygen/site_miner.hpp"
#include "enzygen/verify.hpp"

namespace py = pybind11;
using namespace enzygen;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Array to_numpy(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  Array out(shape);
  std::copy(t.data().begin(), t.data().end(), out.mutable_data());
  return out;
}

Tensor from_numpy(const Array& a, std::size_t cols) {
  if (a.ndim() != 2 || static_cast<std::size_t>(a.shape(1)) != cols) {
    throw DimensionError("expected an array of shape (n, " + std::to_string(cols) + ")");
  }
  const auto rows = static_cast<std::size_t>(a.shape(0));
  return Tensor({rows, cols}, std::vector<double>(a.data(), a.data() + rows * cols));
}

py::dict config_dict(const ModelConfig& c) {
  py::dict d;
  d["d"] = c.d;
  d["heads"] = c.heads;
  d["attention_layers"] = c.attention_layers;
  d["interleave_period"] = c.interleave_period;
  d["substrate_layers"] = c.substrate_layers;
  d["k_neighbors"] = c.k_neighbors;
  d["max_len"] = c.max_len;
  d["lambda_half"] = c.lambda_half;
  d["knn_mode"] = to_string(c.knn_mode);
  d["freeze_motif_coords"] = c.freeze_motif_coords;
  d["tag_vocab"] = c.tag_vocab;
  return d;
}

}  // namespace

PYBIND11_MODULE(_enzygen, m) {
  m.doc() = "EnzyGen core: site mining, geometry, checkpoints and generation";

  auto base = py::register_exception<Error>(m, "EnzyGenError", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<NumericError>(m, "NumericError", base);
  py::register_exception<ContractError>(m, "ContractError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<ParameterError>(m, "ParameterError", base);
  py::register_exception<IndexError>(m, "IndexError", base);
  py::register_exception<VocabularyError>(m, "VocabularyError", base);
  py::register_exception<ParseError>(m, "ParseError", base);
  py::register_exception<DataError>(m, "DataError", base);

  py::class_<SiteAnnotation>(m, "SiteAnnotation")
      .def_readonly("id", &SiteAnnotation::id)
      .def_readonly("indices", &SiteAnnotation::indices)
      .def_readonly("letters", &SiteAnnotation::letters)
      .def("__repr__", [](const SiteAnnotation& s) { return "<SiteAnnotation " + s.id + " " + s.letters + ">"; });

  m.def(
      "mine_sites",
      [](const std::filesystem::path& fasta, double tau) { return mine_sites(read_aligned_fasta(fasta), tau); },
      py::arg("fasta"), py::arg("tau") = kDefaultTau, "Conserved-site annotations for one aligned FASTA family.");
  m.def(
      "conserved_columns",
      [](const std::filesystem::path& fasta, double tau) {
        std::vector<std::pair<std::size_t, char>> out;
        for (const auto& c : conserved_columns(read_aligned_fasta(fasta), tau)) out.emplace_back(c.column, c.letter);
        return out;
      },
      py::arg("fasta"), py::arg("tau") = kDefaultTau, "(column, letter) for every conserved alignment column.");

  m.def("sequence_identity", &sequence_identity, py::arg("a"), py::arg("b"));

  m.def(
      "init_coordinates",
      [](const std::vector<std::size_t>& motif, const Array& motif_coords, std::size_t length, std::uint64_t seed) {
        return to_numpy(init_coordinates(motif, from_numpy(motif_coords, 3), length, seed));
      },
      py::arg("motif"), py::arg("motif_coords"), py::arg("length"), py::arg("seed"),
      "Initial Cα trace: motif rows copied, free residues on a 3.75 Å random walk.");
  m.def(
      "knn",
      [](const Array& coords, std::size_t k) {
        const NeighborGraph g = knn(from_numpy(coords, 3), k);
        py::array_t<std::size_t> out({static_cast<py::ssize_t>(g.num_nodes), static_cast<py::ssize_t>(g.degree)});
        std::copy(g.flat.begin(), g.flat.end(), out.mutable_data());
        return out;
      },
      py::arg("coords"), py::arg("k"), "Indices of the k nearest other points, one row per point.");

  py::class_<Checkpoint>(m, "Checkpoint")
      .def_static(
          "load", [](const std::filesystem::path& p) { return load_checkpoint(p); }, py::arg("path"))
      .def_static(
          "fresh",
          [](std::size_t d, std::size_t heads, std::size_t attention_layers, std::size_t interleave_period,
             const std::vector<std::string>& tags, std::uint64_t seed) {
            ModelConfig c;
            c.d = d;
            c.heads = heads;
            c.attention_layers = attention_layers;
            c.interleave_period = interleave_period;
            ECTree tree;
            for (const auto& t : tags) tree.add(t);
            return fresh_checkpoint(c, tree, seed);
          },
          py::arg("d") = 64, py::arg("heads") = 4, py::arg("attention_layers") = 6, py::arg("interleave_period") = 2,
          py::arg("tags") = std::vector<std::string>{"1.1.1.1"}, py::arg("seed") = 0)
      .def("save", [](const Checkpoint& c, const std::filesystem::path& p) { save_checkpoint(p, c); }, py::arg("path"))
      .def_property_readonly("config", [](const Checkpoint& c) { return config_dict(c.config); })
      .def_readonly("step", &Checkpoint::step)
      .def_readonly("seed", &Checkpoint::seed)
      .def("parameter_names",
           [](const Checkpoint& c) {
             std::vector<std::string> names;
             for (const auto& [name, t] : c.params) names.push_back(name);
             return names;
           })
      .def(
          "parameter", [](const Checkpoint& c, const std::string& name) { return to_numpy(c.params.get(name)); },
          py::arg("name"))
      .def("tag_embeddings",
           [](const Checkpoint& c) {
             py::dict out;
             for (const auto& row : tag_embeddings(c)) {
               Array v(static_cast<py::ssize_t>(row.values.size()));
               std::copy(row.values.begin(), row.values.end(), v.mutable_data());
               out[py::str(row.label)] = v;
             }
             return out;
           })
      .def(
          "generate",
          [](Checkpoint& c, std::size_t length, const std::string& ec, const std::vector<std::size_t>& indices,
             const std::string& residues, const Array& coords, std::size_t count, std::uint64_t seed) {
            MotifSpec motif{length, ec, indices, residues, from_numpy(coords, 3)};
            std::vector<std::pair<std::string, Array>> out;
            for (const auto& cand : generate_candidates(c, motif, count, seed))
              out.emplace_back(cand.sequence, to_numpy(cand.coords));
            return out;
          },
          py::arg("length"), py::arg("ec"), py::arg("indices"), py::arg("residues"), py::arg("coords"),
          py::arg("count") = 1, py::arg("seed") = 0,
          "Greedy designs as (sequence, N×3 coordinates); candidate k uses seed + k.")
      .def(
          "check_equivariance",
          [](Checkpoint& c, std::size_t length, std::size_t cases, std::uint64_t seed) {
            const auto r = check_equivariance(c.params, c.config, length, cases, seed);
            py::dict d;
            d["cases"] = r.cases;
            d["features"] = r.max_feature_dev;
            d["logits"] = r.max_logit_dev;
            d["coords"] = r.max_coord_dev;
            d["substrate"] = r.max_substrate_dev;
            d["binding"] = r.max_binding_dev;
            return d;
          },
          py::arg("length") = 10, py::arg("cases") = 5, py::arg("seed") = 0,
          "Largest deviations under random rigid motions of the input.");
}
