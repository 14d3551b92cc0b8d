#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace edgecache {

using Matrix = std::vector<std::vector<double>>;

// Demand side of an experiment: global file popularity p (pmf over files),
// user activity v (pmf over users), per-user location pmf rows A (over
// cells) and per-user preference pmf rows Q (over files). Consistency
// requirement: sum_u v_u * Q[u][f] == p[f].
struct DemandModel {
  std::vector<double> p;
  std::vector<double> v;
  Matrix A;
  Matrix Q;

  int n_users() const { return static_cast<int>(v.size()); }
  int n_files() const { return static_cast<int>(p.size()); }
};

// Mandelbrot-Zipf pmf over ranks 1..n: (f + beta)^(-delta) normalized.
std::vector<double> mzipf_pmf(int n, double beta, double delta);

struct MZipfFit {
  double beta = 0.0;
  double delta = 0.0;
  int excluded_zeros = 0;  // entries left out of the log-domain residual
};

// Least-squares fit of (beta, delta) to a descending pmf in the log domain
// (nested golden-section search). Zero entries are excluded and counted.
MZipfFit fit_mzipf(const std::vector<double>& pmf);

// Preference rows for all users such that the activity-weighted mixture of
// rows reproduces p exactly. theta in [0,1] trades row diversity (0) against
// uniformity (1: every row equals p).
Matrix synthesize_preferences(const std::vector<double>& p,
                              const std::vector<double>& v, double theta,
                              std::uint64_t seed);

struct ClusteredPreferences {
  Matrix Q;
  std::vector<int> cluster;  // per user
};

// Two-stage cascade: M cluster centres synthesized against p with
// theta_between, then per-cluster user rows against the centre with
// theta_within. The global mixture identity still holds exactly.
ClusteredPreferences synthesize_clustered(const std::vector<double>& p,
                                          const std::vector<double>& v,
                                          int n_clusters, double theta_between,
                                          double theta_within,
                                          std::uint64_t seed);

// Mean pairwise cosine similarity over unordered row pairs.
double average_similarity(const Matrix& Q);

// Invert the theta -> similarity map by bisection on the seed-averaged
// similarity. Throws if the target is outside the attainable range.
double calibrate_theta(const std::vector<double>& p,
                       const std::vector<double>& v, double target_similarity,
                       int n_seeds, std::uint64_t seed, double tol = 0.02);

// Per-user location pmf rows: Zipf(delta_a) weights assigned to a random
// permutation of the cells, independently per user. delta_a = 0 is uniform.
Matrix synthesize_locations(int n_users, int n_cells, double delta_a,
                            std::uint64_t seed);

struct LocalPopularity {
  Matrix p_fi;  // n_files x n_cells
  std::vector<char> defined;  // per cell: false when no activity reaches it
};

LocalPopularity local_popularity(const DemandModel& demand);

struct RequestRecord {
  std::string user;
  std::string item;
  long count = 0;
};

struct RequestLog {
  std::vector<RequestRecord> records;
};

// Tab-separated "user<TAB>item<TAB>count" lines; malformed input reports the
// offending line number.
RequestLog parse_request_log(std::istream& in);

struct EmpiricalDemand {
  std::vector<double> p;
  std::vector<double> v;
  Matrix Q;
  std::vector<std::string> user_ids;
  std::vector<std::string> item_ids;
};

// Restrict a request log to the top_users most active users and the
// top_files most requested files among those users, then convert counts to
// (p, v, Q). Users whose restricted count is zero are dropped.
EmpiricalDemand empirical_demand(const RequestLog& log, int top_users,
                                 int top_files);

}  // namespace edgecache
