#pragma once

// CVRP instances: VRP-REP XML and plain-text loaders, plus the distance
// matrices used by the clustering and routing stages.

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace qroute {

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point&, const Point&) = default;
};

inline double euclidean(const Point& a, const Point& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Instance {
  std::string name;
  std::vector<int> demands;          // per customer, floored
  int capacity = 0;                  // homogeneous capacity Q
  int num_vehicles = 0;              // K
  std::vector<int> fleet_capacities; // replicated profile capacities, size K
  std::vector<Point> customer_coords;
  Point depot_coord;

  std::size_t num_customers() const noexcept { return demands.size(); }
  long long total_demand() const { return std::accumulate(demands.begin(), demands.end(), 0LL); }
  int min_demand() const {
    if (demands.empty()) throw std::logic_error("instance has no customers");
    return *std::min_element(demands.begin(), demands.end());
  }
};

/// Node layout a matrix was built for. Indices are only meaningful relative
/// to the ordering carried by the matrix.
enum class NodeOrdering {
  kCustomersOnly,         // [customers...]
  kDepotCustomersDepot,   // [depot, customers..., depot]
  kDepotCustomers,        // [depot, customers...]; closed tours
  kOpenSentinel,          // [depot, cluster..., depot] with forbidden arcs
};

class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, NodeOrdering ordering)
      : n_(n), ordering_(ordering), data_(n * n, 0.0) {}

  static DistanceMatrix from_points(const std::vector<Point>& pts, NodeOrdering ordering) {
    DistanceMatrix m(pts.size(), ordering);
    for (std::size_t i = 0; i < pts.size(); ++i)
      for (std::size_t j = i + 1; j < pts.size(); ++j)
        m(i, j) = m(j, i) = euclidean(pts[i], pts[j]);
    return m;
  }

  static DistanceMatrix from_rows(const std::vector<std::vector<double>>& rows,
                                  NodeOrdering ordering = NodeOrdering::kDepotCustomers) {
    DistanceMatrix m(rows.size(), ordering);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw std::invalid_argument("distance matrix is not square");
      for (std::size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
    }
    return m;
  }

  std::size_t size() const noexcept { return n_; }
  NodeOrdering ordering() const noexcept { return ordering_; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }

  double max_entry() const {
    double m = 0.0;
    for (double d : data_) m = std::max(m, d);
    return m;
  }

  bool symmetric() const {
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j)
        if ((*this)(i, j) != (*this)(j, i)) return false;
    return true;
  }

 private:
  std::size_t n_ = 0;
  NodeOrdering ordering_ = NodeOrdering::kCustomersOnly;
  std::vector<double> data_;
};

/// Forbidden-arc marker in open cluster matrices.
inline constexpr double kSentinelDistance = 9999999.0;

namespace detail {

inline double parse_number(const std::string& text, const std::string& what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    while (used < text.size() && std::isspace(static_cast<unsigned char>(text[used]))) ++used;
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("non-numeric " + what + ": '" + text + "'");
  }
}

inline std::string trimmed(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline void derive_fleet(Instance& inst, const std::vector<int>& profiles) {
  const long long total_cap = std::accumulate(profiles.begin(), profiles.end(), 0LL);
  if (total_cap <= 0) throw ParseError("vehicle capacity must be positive");
  const long long reps = (inst.total_demand() + total_cap - 1) / total_cap;
  inst.fleet_capacities.clear();
  for (long long r = 0; r < std::max(1LL, reps); ++r)
    inst.fleet_capacities.insert(inst.fleet_capacities.end(), profiles.begin(), profiles.end());
  inst.num_vehicles = static_cast<int>(inst.fleet_capacities.size());
  inst.capacity = profiles.front();
}

}  // namespace detail

/// VRP-REP instance. Demands are floored; customers are type-1 nodes other
/// than the departure node, in document order; the fleet profile list is
/// replicated ceil(total demand / total profile capacity) times.
inline Instance parse_instance_xml(const std::string& xml, std::string name = {}) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(xml);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw ParseError(std::string("malformed XML: ") + e.what());
  }
  const auto root = tree.get_child_optional("instance");
  if (!root) throw ParseError("missing <instance> root");

  Instance inst;
  inst.name = name.empty() ? detail::trimmed(root->get("info.name", std::string{})) : std::move(name);

  if (const auto reqs = root->get_child_optional("requests")) {
    for (const auto& [tag, req] : *reqs) {
      if (tag != "request") continue;
      const auto q = req.get_optional<std::string>("quantity");
      if (!q) throw ParseError("request without quantity");
      inst.demands.push_back(static_cast<int>(std::floor(detail::parse_number(*q, "quantity"))));
    }
  }
  if (inst.demands.empty()) throw ParseError("instance has zero requests");

  std::vector<int> profiles;
  std::optional<std::string> departure;
  if (const auto fleet = root->get_child_optional("fleet")) {
    for (const auto& [tag, prof] : *fleet) {
      if (tag != "vehicle_profile") continue;
      const auto cap = prof.get_optional<std::string>("capacity");
      if (!cap) throw ParseError("vehicle profile without capacity");
      profiles.push_back(static_cast<int>(std::floor(detail::parse_number(*cap, "capacity"))));
      if (!departure) {
        if (auto dep = prof.get_optional<std::string>("departure_node"))
          departure = detail::trimmed(*dep);
      }
    }
  }
  if (profiles.empty()) throw ParseError("missing vehicle capacity");

  bool have_depot = false;
  const auto nodes = root->get_child_optional("network.nodes");
  if (!nodes) throw ParseError("missing network/nodes");
  for (const auto& [tag, node] : *nodes) {
    if (tag != "node") continue;
    const std::string type = detail::trimmed(node.get("<xmlattr>.type", std::string{}));
    const std::string id = detail::trimmed(node.get("<xmlattr>.id", std::string{}));
    const auto cx = node.get_optional<std::string>("cx");
    const auto cy = node.get_optional<std::string>("cy");
    if (!cx || !cy) throw ParseError("node " + id + " lacks coordinates");
    const Point p{detail::parse_number(*cx, "coordinate"), detail::parse_number(*cy, "coordinate")};
    const bool is_departure = departure && id == *departure;
    if (type == "1" && !is_departure) inst.customer_coords.push_back(p);
    if (type == "0" || is_departure) {
      inst.depot_coord = p;
      have_depot = true;
    }
  }
  if (!have_depot) throw ParseError("missing depot node");
  detail::derive_fleet(inst, profiles);
  if (inst.customer_coords.size() != inst.demands.size())
    throw ParseError("customer count " + std::to_string(inst.customer_coords.size()) +
                     " does not match request count " + std::to_string(inst.demands.size()));
  return inst;
}

/// Plain-text instance: "Q K", depot "x y", then "x y demand" per customer.
inline Instance parse_instance_text(const std::string& text, std::string name = {}) {
  std::istringstream in(text);
  Instance inst;
  inst.name = std::move(name);
  long long q = 0, k = 0;
  if (!(in >> q >> k)) throw ParseError("expected 'Q K' header");
  if (q <= 0 || k <= 0) throw ParseError("capacity and vehicle count must be positive");
  if (!(in >> inst.depot_coord.x >> inst.depot_coord.y)) throw ParseError("expected depot coordinates");
  double x, y, d;
  while (in >> x >> y >> d) {
    inst.customer_coords.push_back({x, y});
    inst.demands.push_back(static_cast<int>(std::floor(d)));
  }
  if (!in.eof()) throw ParseError("trailing non-numeric content in text instance");
  if (inst.demands.empty()) throw ParseError("instance has zero customers");
  inst.capacity = static_cast<int>(q);
  inst.num_vehicles = static_cast<int>(k);
  inst.fleet_capacities.assign(static_cast<std::size_t>(k), static_cast<int>(q));
  return inst;
}

inline std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Dispatches on extension: ".xml" is VRP-REP, anything else plain text.
inline Instance load_instance(const std::string& path) {
  std::string stem = path.substr(path.find_last_of("/\\") + 1);
  const auto dot = stem.find_last_of('.');
  const std::string ext = dot == std::string::npos ? "" : stem.substr(dot);
  if (dot != std::string::npos) stem = stem.substr(0, dot);
  const std::string body = read_file(path);
  Instance inst = ext == ".xml" ? parse_instance_xml(body) : parse_instance_text(body, stem);
  if (inst.name.empty()) inst.name = stem;
  return inst;
}

/// [depot, customers..., depot]
inline DistanceMatrix full_distance_matrix(const Instance& inst) {
  std::vector<Point> pts;
  pts.reserve(inst.num_customers() + 2);
  pts.push_back(inst.depot_coord);
  pts.insert(pts.end(), inst.customer_coords.begin(), inst.customer_coords.end());
  pts.push_back(inst.depot_coord);
  return DistanceMatrix::from_points(pts, NodeOrdering::kDepotCustomersDepot);
}

inline DistanceMatrix distances_without_depots(const DistanceMatrix& m) {
  if (m.ordering() != NodeOrdering::kDepotCustomersDepot)
    throw std::invalid_argument("expected a [depot, customers, depot] matrix");
  if (m.size() <= 2) throw std::invalid_argument("matrix has no customer block");
  DistanceMatrix out(m.size() - 2, NodeOrdering::kCustomersOnly);
  for (std::size_t i = 0; i < out.size(); ++i)
    for (std::size_t j = 0; j < out.size(); ++j) out(i, j) = m(i + 1, j + 1);
  return out;
}

inline DistanceMatrix customer_distance_matrix(const Instance& inst) {
  return DistanceMatrix::from_points(inst.customer_coords, NodeOrdering::kCustomersOnly);
}

namespace detail {
inline std::vector<Point> cluster_points(const Instance& inst, const std::vector<int>& cluster,
                                         bool close_with_depot) {
  std::vector<Point> pts{inst.depot_coord};
  for (int c : cluster) {
    if (c < 0 || static_cast<std::size_t>(c) >= inst.num_customers())
      throw std::out_of_range("cluster member " + std::to_string(c) + " out of range");
    pts.push_back(inst.customer_coords[static_cast<std::size_t>(c)]);
  }
  if (close_with_depot) pts.push_back(inst.depot_coord);
  return pts;
}
}  // namespace detail

/// [depot, members..., depot] with sentinels: column 0, the whole last row,
/// and every zero entry. Start depot can't be re-entered, end depot can't be
/// left, self-arcs are forbidden.
inline DistanceMatrix cluster_distance_matrix_open(const Instance& inst, const std::vector<int>& cluster) {
  DistanceMatrix m = DistanceMatrix::from_points(detail::cluster_points(inst, cluster, true),
                                                 NodeOrdering::kOpenSentinel);
  const std::size_t n = m.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (j == 0 || i == n - 1 || m(i, j) == 0.0) m(i, j) = kSentinelDistance;
    }
  }
  return m;
}

/// [depot, members...], plain Euclidean.
inline DistanceMatrix cluster_distance_matrix_closed(const Instance& inst, const std::vector<int>& cluster) {
  return DistanceMatrix::from_points(detail::cluster_points(inst, cluster, false),
                                     NodeOrdering::kDepotCustomers);
}

}  // namespace qroute
