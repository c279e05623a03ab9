#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hypereyes {

enum class Listing { whitelist, blacklist, neutral };

std::string_view to_string(Listing l) noexcept;

struct Predicate {
  std::string id;
  std::string family;  // attribute domain, e.g. "occupation", "award"
  Listing listed = Listing::neutral;
};

struct Attribute {
  std::string predicate_id;
  std::string value_id;

  friend auto operator<=>(const Attribute&, const Attribute&) = default;
};

struct Entity {
  std::string id;
  std::string name;        // display name; defaults to id
  std::string class_name;
  std::vector<Attribute> attributes;
  std::vector<std::string> snippets;            // snippets[0] is the identity snippet
  std::map<std::string, std::string> literals;  // scalar facts such as wingspan_cm -> "50"
};

/// A closed-book fact: any question mentioning `key` is "known" to have `answer`.
struct FamousFact {
  std::string key;
  std::string answer;
};

class LoadError : public std::runtime_error {
 public:
  enum class Kind { parse, dangling_reference, duplicate_id };
  LoadError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  [[nodiscard]] Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

class UnknownEntity : public std::out_of_range {
 public:
  explicit UnknownEntity(const std::string& id) : std::out_of_range("unknown entity: " + id) {}
};

// Immutable once built; concurrent readers need no coordination.
class WorldFixture {
 public:
  WorldFixture() = default;

  [[nodiscard]] const std::vector<Entity>& entities() const noexcept { return entities_; }
  [[nodiscard]] const std::vector<Predicate>& predicates() const noexcept { return predicates_; }
  [[nodiscard]] const std::set<std::string>& abstract_values() const noexcept { return abstract_values_; }
  [[nodiscard]] const std::set<std::string>& bias_prone_types() const noexcept { return bias_prone_types_; }
  [[nodiscard]] const std::map<std::string, std::vector<std::string>>& distractor_pool() const noexcept {
    return distractor_pool_;
  }
  [[nodiscard]] const std::vector<FamousFact>& famous_facts() const noexcept { return famous_facts_; }

  [[nodiscard]] bool has_entity(std::string_view id) const;
  [[nodiscard]] const Entity& entity(std::string_view id) const;  // throws UnknownEntity
  [[nodiscard]] const Predicate* find_predicate(std::string_view id) const;

  /// Undirected first-order neighborhood, excluding the entity itself.
  [[nodiscard]] std::set<std::string> neighbors(std::string_view id) const;

  /// Number of attribute edges whose value is `id` (incoming references).
  [[nodiscard]] std::size_t out_degree(std::string_view id) const;

  [[nodiscard]] bool has_attribute(std::string_view entity_id, const Attribute& attr) const;

  /// Families with at least one blacklist-listed predicate.
  [[nodiscard]] std::set<std::string> blacklisted_families() const;

  /// Entities of one class, in fixture order.
  [[nodiscard]] std::vector<std::string> entities_of_class(std::string_view class_name) const;

  [[nodiscard]] std::size_t edge_count() const noexcept { return edge_count_; }

  /// Serializes back to the line-delimited fixture format.
  void write(std::ostream& out) const;

  friend class WorldBuilder;

 private:
  void index();

  std::vector<Entity> entities_;
  std::vector<Predicate> predicates_;
  std::set<std::string> abstract_values_;
  std::set<std::string> bias_prone_types_;
  std::map<std::string, std::vector<std::string>> distractor_pool_;
  std::vector<FamousFact> famous_facts_;

  std::unordered_map<std::string, std::size_t> entity_index_;
  std::unordered_map<std::string, std::size_t> predicate_index_;
  std::unordered_map<std::string, std::size_t> in_degree_;
  std::unordered_map<std::string, std::set<std::string>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Validating builder used by the loader and by synthetic-fixture generators.
class WorldBuilder {
 public:
  WorldBuilder& add_predicate(Predicate p);
  WorldBuilder& add_entity(Entity e);
  WorldBuilder& add_edge(std::string source, std::string predicate, std::string value);
  WorldBuilder& add_abstract_value(std::string entity_id);
  WorldBuilder& add_bias_prone_type(std::string class_name);
  WorldBuilder& add_distractor(std::string topic, std::string snippet);
  WorldBuilder& add_famous_fact(FamousFact f);

  /// Checks referential integrity and id uniqueness; throws LoadError.
  [[nodiscard]] WorldFixture build() &&;

 private:
  struct Edge {
    std::string source, predicate, value;
  };
  WorldFixture world_;
  std::vector<Edge> edges_;
  std::vector<std::string> abstract_;
};

WorldFixture load_world(std::istream& in);
WorldFixture load_world(const std::filesystem::path& path);

/// Resolves a fixture name against HYPEREYES_FIXTURE_PATH (colon-separated) when it is not a readable path.
std::filesystem::path resolve_fixture_path(const std::string& name);

}  // namespace hypereyes
