#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "exkin/dynamics.hpp"
#include "exkin/oracle.hpp"
#include "exkin/regression.hpp"

namespace exkin {

inline constexpr const char* kToolVersion = "0.1.0";

/// Deterministic per-scenario seed derivation: splitmix64 of the master
/// seed xor an FNV-1a hash of the scenario id. Adding scenarios never
/// perturbs existing streams.
std::uint64_t derive_seed(std::uint64_t master_seed, const std::string& scenario_id);

/// FNV-1a hash of a file's contents, used as the config hash in metadata
/// headers.
std::uint64_t file_hash(const std::filesystem::path& path);

// ---- chain / camera config files (JSON, axis-angle rotations) ----

KinematicChain load_chain(const std::filesystem::path& path);
void save_chain(const KinematicChain& chain, const std::filesystem::path& path);

CameraModel load_camera(const std::filesystem::path& path);
void save_camera(const CameraModel& cam, const std::filesystem::path& path);

// ---- object presets: named ground-truth φ̄ sets plus grasp shifts ----

struct ObjectSpec {
  std::string name;
  VirtualJointSet phi_true;
};

struct ObjectLibrary {
  std::vector<ObjectSpec> objects;
  std::vector<Eigen::Vector3d> grasp_shifts;  // applied to every φ_k, ee frame

  const ObjectSpec& find(const std::string& name) const;
};

ObjectLibrary load_objects(const std::filesystem::path& path);

/// φ̄ with a grasp shift applied to every virtual link.
VirtualJointSet shifted(const VirtualJointSet& phi, const Eigen::Vector3d& shift);

// ---- observation dataset CSV ----
// Header: t,theta_0..theta_{dof-1},kp0_x,kp0_y,kp0_d,...  Floats printed
// with 17 significant digits so the round trip is lossless. Lines starting
// with '#' are metadata and skipped on read.

void save_dataset(const ObservationDataset& ds, const std::filesystem::path& path,
                  const std::map<std::string, std::string>& metadata = {});
ObservationDataset load_dataset(const std::filesystem::path& path);

// ---- regression report ----

void save_regression_report(const RegressionResult& res, const std::filesystem::path& phi_path,
                            const std::filesystem::path& loss_history_path,
                            const std::map<std::string, std::string>& metadata = {});
VirtualJointSet load_phi(const std::filesystem::path& path);

// ---- MLP checkpoint: versioned header, layer sizes, stats, flat weights ----

void save_mlp(const MlpModel& model, const std::filesystem::path& path);
MlpModel load_mlp(const std::filesystem::path& path);

// ---- generic CSV writer with deterministic metadata header ----

class CsvWriter {
public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
            const std::map<std::string, std::string>& metadata = {});
  ~CsvWriter();

  void row(const std::vector<std::string>& cells);
  void close();

  static std::string num(double v);  // %.17g
  static std::string num(std::int64_t v);

private:
  std::filesystem::path path_;
  std::filesystem::path tmp_path_;
  std::string buffer_;
  std::size_t n_columns_;
  bool closed_ = false;
};

}  // namespace exkin
