#include "milo/relax/serialize.hpp"

#include <fstream>
#include <limits>

namespace milo::relax {

namespace {

nlohmann::json sparse_to_json(const SpMat& M) {
  nlohmann::json j;
  j["rows"] = M.rows();
  j["cols"] = M.cols();
  nlohmann::json trips = nlohmann::json::array();
  for (int c = 0; c < M.outerSize(); ++c)
    for (SpMat::InnerIterator it(M, c); it; ++it)
      trips.push_back({it.row(), c, it.value()});
  j["triplets"] = std::move(trips);
  return j;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json j = nlohmann::json::array();
  for (int i = 0; i < v.size(); ++i) {
    if (v[i] == std::numeric_limits<double>::infinity()) j.push_back("inf");
    else if (v[i] == -std::numeric_limits<double>::infinity()) j.push_back("-inf");
    else j.push_back(v[i]);
  }
  return j;
}

}  // namespace

nlohmann::json miqp_to_json(const MixedIntegerQP& m) {
  nlohmann::json j;
  j["schema_version"] = 1;
  j["n"] = m.num_vars();
  j["m"] = m.num_rows();
  j["horizon"] = m.horizon;
  j["obj_const"] = m.obj_const;
  j["P"] = sparse_to_json(m.P);
  j["A"] = sparse_to_json(m.cons.A);
  j["q"] = vec_to_json(m.q);
  j["l"] = vec_to_json(m.cons.l);
  j["u"] = vec_to_json(m.cons.u);
  j["lb"] = vec_to_json(m.lb);
  j["ub"] = vec_to_json(m.ub);
  j["binary_idx"] = m.binary_idx;
  j["names"] = m.names.all();
  return j;
}

void save_miqp_json(const MixedIntegerQP& m, const std::string& path) {
  std::ofstream out(path);
  out << miqp_to_json(m).dump() << "\n";
}

}  // namespace milo::relax
