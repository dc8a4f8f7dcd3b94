#pragma once

#include <filesystem>
#include <istream>
#include <stdexcept>
#include <string>

#include "corrl/adversary.hpp"
#include "corrl/dataset.hpp"
#include "corrl/mdp.hpp"

namespace corrl {

/// Malformed input file or unwritable output; the message names the path or
/// the offending line.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// MDP text format:
///
///   S=3
///   A=2
///   H=2
///   d=6
///   sigma=0.5
///   rho=2.449
///   noise=gaussian
///   [features]   (S*A rows of d comma-separated values)
///   [measures]   (S rows of d values)
///   [theta]      (one row of d values)
///   [mu0]        (one row of S values)
///
/// Lines starting with '#' and blank lines are ignored.
std::string mdp_to_text(const LinearMdp& mdp);
LinearMdp mdp_from_text(const std::string& text);

/// CSV with header idx,s,a,r,s_next. The corruption mask is not written.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

/// CSV with header index,s,a,r,s_next (one row per replacement).
std::string plan_to_csv(const AttackPlan& plan);
AttackPlan plan_from_csv(const std::string& text, double epsilon);

/// CSV with header h,s,a; h is 1-based.
std::string policy_to_csv(const PolicyTable& policy);
PolicyTable policy_from_csv(const std::string& text);

/// CSV with header s,a,prob. Pairs not listed get probability 0.
std::string distribution_to_csv(const OfflineDistribution& nu, int num_actions);
OfflineDistribution distribution_from_csv(const std::string& text, int num_states, int num_actions);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& content);

/// Lower-case hex SHA-256 of the bytes.
std::string sha256_hex(const std::string& bytes);

}  // namespace corrl
