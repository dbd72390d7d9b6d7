#ifndef IMMFIT_SIMULATOR_HPP
#define IMMFIT_SIMULATOR_HPP

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "immfit/params.hpp"

namespace immfit {

// One simulated target: ground-truth states, the true mode sequence, and the
// noisy position measurements the filters consume.
struct Trajectory {
    std::vector<std::array<double, 4>> states;        // (px, vx, py, vy)
    std::vector<int> modes;                           // active mode i_t
    std::vector<std::array<double, 2>> measurements;  // (zx, zy)

    int length() const { return static_cast<int>(states.size()); }
};

struct Dataset {
    std::uint64_t seed = 0;
    ParamVector true_params;
    ModelConfig config;
    std::vector<Trajectory> trajectories;
    std::vector<int> train_indices;  // even trajectory indices
    std::vector<int> test_indices;   // odd trajectory indices

    std::vector<const std::vector<std::array<double, 2>>*> measurement_view(
        const std::vector<int>& indices) const {
        std::vector<const std::vector<std::array<double, 2>>*> out;
        out.reserve(indices.size());
        for (int i : indices) out.push_back(&trajectories[static_cast<std::size_t>(i)].measurements);
        return out;
    }

    std::vector<const Trajectory*> trajectory_view(const std::vector<int>& indices) const {
        std::vector<const Trajectory*> out;
        out.reserve(indices.size());
        for (int i : indices) out.push_back(&trajectories[static_cast<std::size_t>(i)]);
        return out;
    }
};

struct SimOptions {
    int n_trajectories = 60;
    int length = 120;
    int modes = 2;
    double tau = 1.0;
};

// Deterministic substream derivation so that trajectories can be generated
// independently (and in parallel) from (seed, stream, index).
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream, std::uint64_t index = 0);

// Uniform parameter draws from the dataset sampling intervals:
// sigma_v0 in [1e-3, 0.98], sigma_v1 in [9.81, 49.1],
// p_stay in [0.95, 0.999], sigma_r in [1, 25]. Supports m = 1 or 2.
ParamVector sample_dataset_params(std::mt19937_64& rng, int modes);

// Markov mode sequence plus white-noise-acceleration dynamics; the target
// starts at the origin with zero velocity and the initial mode is drawn from
// the chain's stationary distribution.
Trajectory generate_trajectory(const ParamVector& theta, const ModelConfig& cfg, int length,
                               std::mt19937_64& rng);

Dataset generate_dataset(std::uint64_t seed, const SimOptions& options = {});

std::string dataset_to_json_string(const Dataset& ds);
Dataset dataset_from_json_string(const std::string& text);
void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

// Writes one CSV per trajectory (columns t,zx,zy) into the directory.
void export_measurements_csv(const Dataset& ds, const std::string& directory);

}  // namespace immfit

#endif  // IMMFIT_SIMULATOR_HPP
