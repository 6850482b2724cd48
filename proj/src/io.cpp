#include "exkin/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace exkin {

using nlohmann::json;

std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& scenario_id) {
  std::uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a
  for (unsigned char c : scenario_id) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  std::uint64_t z = master_seed ^ h;  // splitmix64 finalizer
  z += 0x9e3779b97f4a7c15ull;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t file_hash(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file for hashing: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ull;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

namespace {

json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("failed to parse " + path.string() + ": " + e.what());
  }
  return j;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot open file for writing: " + path.string());
    out << text;
  }
  std::filesystem::rename(tmp, path);
}

Eigen::Vector3d vec3(const json& j, const std::string& key) {
  const auto& a = j.at(key);
  if (!a.is_array() || a.size() != 3) throw Error("field '" + key + "' must be a 3-array");
  return {a[0].get<double>(), a[1].get<double>(), a[2].get<double>()};
}

json to_array(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

Eigen::Vector3d axis_angle_of(const RigidTransform& t) {
  const Eigen::AngleAxisd aa(t.rotation);
  return aa.angle() * aa.axis();
}

}  // namespace

KinematicChain load_chain(const std::filesystem::path& path) {
  const json j = load_json(path);
  std::vector<Link> links;
  for (const auto& jl : j.at("links")) {
    Link link;
    link.name = jl.at("name").get<std::string>();
    const std::string type = jl.at("joint_type").get<std::string>();
    if (type == "revolute") {
      link.joint_type = JointType::Revolute;
      link.joint_axis = vec3(jl, "axis");
    } else if (type == "fixed") {
      link.joint_type = JointType::Fixed;
    } else {
      throw Error(path.string() + ": unknown joint_type '" + type + "'");
    }
    const Eigen::Vector3d rot = jl.contains("rotation") ? vec3(jl, "rotation") : Eigen::Vector3d::Zero();
    link.fixed_transform = RigidTransform::from_axis_angle(rot, vec3(jl, "translation"));
    links.push_back(std::move(link));
  }
  std::vector<VirtualLink> virtual_links;
  if (j.contains("virtual_links")) {
    for (const auto& jv : j.at("virtual_links")) {
      VirtualLink v;
      v.translation = vec3(jv, "translation");
      v.learnable = jv.value("learnable", true);
      virtual_links.push_back(v);
    }
  }
  return KinematicChain(std::move(links), std::move(virtual_links));
}

void save_chain(const KinematicChain& chain, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = 1;
  j["links"] = json::array();
  for (const auto& link : chain.links()) {
    json jl;
    jl["name"] = link.name;
    jl["joint_type"] = link.joint_type == JointType::Revolute ? "revolute" : "fixed";
    if (link.joint_type == JointType::Revolute) jl["axis"] = to_array(link.joint_axis);
    jl["translation"] = to_array(link.fixed_transform.translation);
    jl["rotation"] = to_array(axis_angle_of(link.fixed_transform));
    j["links"].push_back(jl);
  }
  j["virtual_links"] = json::array();
  for (const auto& v : chain.virtual_links()) {
    j["virtual_links"].push_back({{"translation", to_array(v.translation)}, {"learnable", v.learnable}});
  }
  write_text(path, j.dump(2) + "\n");
}

CameraModel load_camera(const std::filesystem::path& path) {
  const json j = load_json(path);
  CameraModel cam;
  cam.fx = j.at("fx").get<double>();
  cam.fy = j.at("fy").get<double>();
  cam.cx = j.at("cx").get<double>();
  cam.cy = j.at("cy").get<double>();
  cam.width = j.at("width").get<int>();
  cam.height = j.at("height").get<int>();
  const auto& je = j.at("extrinsic");
  cam.extrinsic = RigidTransform::from_axis_angle(vec3(je, "rotation"), vec3(je, "translation"));
  cam.validate();
  return cam;
}

void save_camera(const CameraModel& cam, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = 1;
  j["fx"] = cam.fx;
  j["fy"] = cam.fy;
  j["cx"] = cam.cx;
  j["cy"] = cam.cy;
  j["width"] = cam.width;
  j["height"] = cam.height;
  j["extrinsic"] = {{"translation", to_array(cam.extrinsic.translation)},
                    {"rotation", to_array(axis_angle_of(cam.extrinsic))}};
  write_text(path, j.dump(2) + "\n");
}

const ObjectSpec& ObjectLibrary::find(const std::string& name) const {
  for (const auto& obj : objects)
    if (obj.name == name) return obj;
  throw Error("unknown object preset '" + name + "'");
}

ObjectLibrary load_objects(const std::filesystem::path& path) {
  const json j = load_json(path);
  ObjectLibrary lib;
  for (const auto& jo : j.at("objects")) {
    ObjectSpec obj;
    obj.name = jo.at("name").get<std::string>();
    std::vector<Eigen::Vector3d> offsets;
    for (const auto& jk : jo.at("virtual_joints")) {
      if (!jk.is_array() || jk.size() != 3) throw Error("virtual_joints entries must be 3-arrays");
      offsets.emplace_back(jk[0].get<double>(), jk[1].get<double>(), jk[2].get<double>());
    }
    obj.phi_true = VirtualJointSet::zeros(static_cast<int>(offsets.size()));
    for (std::size_t k = 0; k < offsets.size(); ++k)
      obj.phi_true.set_offset(static_cast<int>(k), offsets[k]);
    lib.objects.push_back(std::move(obj));
  }
  for (const auto& js : j.at("grasp_shifts")) {
    if (!js.is_array() || js.size() != 3) throw Error("grasp_shifts entries must be 3-arrays");
    lib.grasp_shifts.emplace_back(js[0].get<double>(), js[1].get<double>(), js[2].get<double>());
  }
  return lib;
}

VirtualJointSet shifted(const VirtualJointSet& phi, const Eigen::Vector3d& shift) {
  VirtualJointSet out = phi;
  for (int k = 0; k < out.count(); ++k) out.set_offset(k, out.offset(k) + shift);
  return out;
}

std::string CsvWriter::num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string CsvWriter::num(std::int64_t v) { return std::to_string(v); }

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
                     const std::map<std::string, std::string>& metadata)
    : path_(path), tmp_path_(path.string() + ".tmp"), n_columns_(columns.size()) {
  buffer_ += "# tool_version=" + std::string(kToolVersion) + "\n";
  for (const auto& [key, value] : metadata) buffer_ += "# " + key + "=" + value + "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    buffer_ += columns[i];
    buffer_ += (i + 1 < columns.size()) ? "," : "\n";
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != n_columns_) throw Error("CsvWriter: wrong cell count");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    buffer_ += cells[i];
    buffer_ += (i + 1 < cells.size()) ? "," : "\n";
  }
}

void CsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  std::ofstream out(tmp_path_, std::ios::binary);
  if (!out) throw Error("cannot write " + path_.string());
  out << buffer_;
  out.close();
  std::filesystem::rename(tmp_path_, path_);
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

void save_dataset(const ObservationDataset& ds, const std::filesystem::path& path,
                  const std::map<std::string, std::string>& metadata) {
  const int dof = ds.records.empty() ? 0 : static_cast<int>(ds.records[0].theta.size());
  const int k = ds.keypoint_count();
  std::vector<std::string> columns{"t"};
  for (int j = 0; j < dof; ++j) columns.push_back("theta_" + std::to_string(j));
  for (int i = 0; i < k; ++i) {
    columns.push_back("kp" + std::to_string(i) + "_x");
    columns.push_back("kp" + std::to_string(i) + "_y");
    columns.push_back("kp" + std::to_string(i) + "_d");
  }
  std::map<std::string, std::string> meta = metadata;
  meta["seed"] = std::to_string(ds.seed);
  meta["pixel_sigma"] = CsvWriter::num(ds.pixel_sigma);
  meta["depth_sigma"] = CsvWriter::num(ds.depth_sigma);
  CsvWriter csv(path, columns, meta);
  for (std::size_t t = 0; t < ds.records.size(); ++t) {
    std::vector<std::string> cells{std::to_string(t)};
    const auto& rec = ds.records[t];
    for (int j = 0; j < dof; ++j) cells.push_back(CsvWriter::num(rec.theta[j]));
    for (const auto& kp : rec.keypoints) {
      cells.push_back(CsvWriter::num(kp.x));
      cells.push_back(CsvWriter::num(kp.y));
      cells.push_back(CsvWriter::num(kp.depth));
    }
    csv.row(cells);
  }
  csv.close();
}

ObservationDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file: " + path.string());
  ObservationDataset ds;
  std::string line;
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq != std::string::npos) {
        const std::string key = line.substr(2, eq - 2);
        const std::string value = line.substr(eq + 1);
        if (key == "seed") ds.seed = std::stoull(value);
        if (key == "pixel_sigma") ds.pixel_sigma = std::stod(value);
        if (key == "depth_sigma") ds.depth_sigma = std::stod(value);
      }
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (header.empty()) {
      header = std::move(cells);
      continue;
    }
    if (cells.size() != header.size()) throw Error(path.string() + ": ragged CSV row");
    int dof = 0;
    for (const auto& h : header)
      if (h.rfind("theta_", 0) == 0) ++dof;
    const int k = static_cast<int>((header.size() - 1 - dof) / 3);
    ObservationRecord rec;
    rec.theta.resize(dof);
    for (int j = 0; j < dof; ++j) rec.theta[j] = std::stod(cells[1 + j]);
    for (int i = 0; i < k; ++i) {
      rec.keypoints.push_back({std::stod(cells[1 + dof + 3 * i]), std::stod(cells[2 + dof + 3 * i]),
                               std::stod(cells[3 + dof + 3 * i])});
    }
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void save_regression_report(const RegressionResult& res, const std::filesystem::path& phi_path,
                            const std::filesystem::path& loss_history_path,
                            const std::map<std::string, std::string>& metadata) {
  json j;
  j["schema_version"] = 1;
  j["tool_version"] = kToolVersion;
  j["converged"] = res.converged;
  j["steps_taken"] = res.steps_taken;
  j["final_loss"] = res.loss_history.empty() ? 0.0 : res.loss_history.back();
  j["phi"] = json::array();
  for (int k = 0; k < res.phi.count(); ++k) j["phi"].push_back(to_array(res.phi.offset(k)));
  for (const auto& [key, value] : metadata) j["metadata"][key] = value;
  write_text(phi_path, j.dump(2) + "\n");

  CsvWriter csv(loss_history_path, {"step", "loss"}, metadata);
  for (std::size_t i = 0; i < res.loss_history.size(); ++i)
    csv.row({std::to_string(i), CsvWriter::num(res.loss_history[i])});
  csv.close();
}

VirtualJointSet load_phi(const std::filesystem::path& path) {
  const json j = load_json(path);
  const auto& jp = j.at("phi");
  VirtualJointSet phi = VirtualJointSet::zeros(static_cast<int>(jp.size()));
  for (std::size_t k = 0; k < jp.size(); ++k) {
    phi.set_offset(static_cast<int>(k),
                   {jp[k][0].get<double>(), jp[k][1].get<double>(), jp[k][2].get<double>()});
  }
  return phi;
}

void save_mlp(const MlpModel& model, const std::filesystem::path& path) {
  json j;
  j["schema_version"] = 1;
  j["tool_version"] = kToolVersion;
  j["layer_sizes"] = model.layer_sizes();
  j["activation"] = model.activation() == Activation::Tanh ? "tanh" : "relu";
  auto dump_vec = [](const Eigen::VectorXd& v) {
    json a = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
    return a;
  };
  j["input_mean"] = dump_vec(model.input_mean());
  j["input_std"] = dump_vec(model.input_std());
  j["output_mean"] = dump_vec(model.output_mean());
  j["output_std"] = dump_vec(model.output_std());
  j["weights"] = dump_vec(model.flat_weights());
  write_text(path, j.dump() + "\n");
}

MlpModel load_mlp(const std::filesystem::path& path) {
  const json j = load_json(path);
  if (j.at("schema_version").get<int>() != 1) throw Error("unsupported checkpoint version");
  const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
  const Activation act = j.at("activation").get<std::string>() == "tanh" ? Activation::Tanh
                                                                         : Activation::Relu;
  MlpModel model(sizes, act, 0);
  auto read_vec = [&](const std::string& key) {
    const auto& a = j.at(key);
    Eigen::VectorXd v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
    return v;
  };
  model.set_normalization(read_vec("input_mean"), read_vec("input_std"), read_vec("output_mean"),
                          read_vec("output_std"));
  model.set_flat_weights(read_vec("weights"));
  return model;
}

}  // namespace exkin
