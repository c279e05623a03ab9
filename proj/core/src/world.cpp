#include "hypereyes/world.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "hypereyes/text.hpp"

namespace hypereyes {

namespace {

using json = nlohmann::json;

// Used when a fixture declares none of its own.
const std::set<std::string> kDefaultBiasProneTypes = {"country", "city", "political_party", "religion"};
const std::set<std::string> kDefaultAbstractValues = {"human", "organization"};

Listing listing_from_string(const std::string& s, std::size_t line) {
  if (s == "whitelist") return Listing::whitelist;
  if (s == "blacklist") return Listing::blacklist;
  if (s == "neutral" || s.empty()) return Listing::neutral;
  throw LoadError(LoadError::Kind::parse, "line " + std::to_string(line) + ": unknown listing \"" + s + "\"");
}

std::string required_string(const json& rec, const char* key, std::size_t line) {
  auto it = rec.find(key);
  if (it == rec.end() || !it->is_string() || it->get_ref<const std::string&>().empty())
    throw LoadError(LoadError::Kind::parse,
                    "line " + std::to_string(line) + ": missing string field \"" + std::string(key) + "\"");
  return it->get<std::string>();
}

}  // namespace

std::string_view to_string(Listing l) noexcept {
  switch (l) {
    case Listing::whitelist: return "whitelist";
    case Listing::blacklist: return "blacklist";
    case Listing::neutral: return "neutral";
  }
  return "neutral";
}

bool WorldFixture::has_entity(std::string_view id) const { return entity_index_.count(std::string(id)) > 0; }

const Entity& WorldFixture::entity(std::string_view id) const {
  auto it = entity_index_.find(std::string(id));
  if (it == entity_index_.end()) throw UnknownEntity(std::string(id));
  return entities_[it->second];
}

const Predicate* WorldFixture::find_predicate(std::string_view id) const {
  auto it = predicate_index_.find(std::string(id));
  return it == predicate_index_.end() ? nullptr : &predicates_[it->second];
}

std::set<std::string> WorldFixture::neighbors(std::string_view id) const {
  if (!has_entity(id)) throw UnknownEntity(std::string(id));
  auto it = adjacency_.find(std::string(id));
  return it == adjacency_.end() ? std::set<std::string>{} : it->second;
}

std::size_t WorldFixture::out_degree(std::string_view id) const {
  if (!has_entity(id)) throw UnknownEntity(std::string(id));
  auto it = in_degree_.find(std::string(id));
  return it == in_degree_.end() ? 0 : it->second;
}

bool WorldFixture::has_attribute(std::string_view entity_id, const Attribute& attr) const {
  const auto& e = entity(entity_id);
  for (const auto& a : e.attributes)
    if (a == attr) return true;
  return false;
}

std::set<std::string> WorldFixture::blacklisted_families() const {
  std::set<std::string> out;
  for (const auto& p : predicates_)
    if (p.listed == Listing::blacklist) out.insert(p.family);
  return out;
}

std::vector<std::string> WorldFixture::entities_of_class(std::string_view class_name) const {
  std::vector<std::string> out;
  for (const auto& e : entities_)
    if (e.class_name == class_name) out.push_back(e.id);
  return out;
}

void WorldFixture::index() {
  entity_index_.clear();
  predicate_index_.clear();
  in_degree_.clear();
  adjacency_.clear();
  edge_count_ = 0;
  for (std::size_t i = 0; i < entities_.size(); ++i) entity_index_.emplace(entities_[i].id, i);
  for (std::size_t i = 0; i < predicates_.size(); ++i) predicate_index_.emplace(predicates_[i].id, i);
  for (const auto& e : entities_) {
    for (const auto& a : e.attributes) {
      ++edge_count_;
      ++in_degree_[a.value_id];
      if (a.value_id != e.id) {
        adjacency_[e.id].insert(a.value_id);
        adjacency_[a.value_id].insert(e.id);
      }
    }
  }
}

void WorldFixture::write(std::ostream& out) const {
  for (const auto& p : predicates_)
    out << json{{"kind", "predicate"}, {"id", p.id}, {"family", p.family}, {"listed", to_string(p.listed)}}.dump()
        << '\n';
  for (const auto& e : entities_) {
    json rec{{"kind", "entity"}, {"id", e.id}, {"name", e.name}, {"class", e.class_name}, {"snippets", e.snippets}};
    if (!e.literals.empty()) rec["literals"] = e.literals;
    out << rec.dump() << '\n';
  }
  for (const auto& e : entities_)
    for (const auto& a : e.attributes)
      out << json{{"kind", "edge"}, {"source", e.id}, {"predicate", a.predicate_id}, {"value", a.value_id}}.dump()
          << '\n';
  for (const auto& v : abstract_values_) out << json{{"kind", "abstract_value"}, {"entity", v}}.dump() << '\n';
  for (const auto& c : bias_prone_types_) out << json{{"kind", "bias_prone_type"}, {"class", c}}.dump() << '\n';
  for (const auto& [topic, snippets] : distractor_pool_)
    for (const auto& s : snippets) out << json{{"kind", "distractor"}, {"topic", topic}, {"snippet", s}}.dump() << '\n';
  for (const auto& f : famous_facts_)
    out << json{{"kind", "famous_fact"}, {"key", f.key}, {"answer", f.answer}}.dump() << '\n';
}

WorldBuilder& WorldBuilder::add_predicate(Predicate p) {
  world_.predicates_.push_back(std::move(p));
  return *this;
}

WorldBuilder& WorldBuilder::add_entity(Entity e) {
  if (e.name.empty()) e.name = e.id;
  world_.entities_.push_back(std::move(e));
  return *this;
}

WorldBuilder& WorldBuilder::add_edge(std::string source, std::string predicate, std::string value) {
  edges_.push_back({std::move(source), std::move(predicate), std::move(value)});
  return *this;
}

WorldBuilder& WorldBuilder::add_abstract_value(std::string entity_id) {
  abstract_.push_back(std::move(entity_id));
  return *this;
}

WorldBuilder& WorldBuilder::add_bias_prone_type(std::string class_name) {
  world_.bias_prone_types_.insert(std::move(class_name));
  return *this;
}

WorldBuilder& WorldBuilder::add_distractor(std::string topic, std::string snippet) {
  world_.distractor_pool_[std::move(topic)].push_back(std::move(snippet));
  return *this;
}

WorldBuilder& WorldBuilder::add_famous_fact(FamousFact f) {
  world_.famous_facts_.push_back(std::move(f));
  return *this;
}

WorldFixture WorldBuilder::build() && {
  WorldFixture w = std::move(world_);
  {
    std::set<std::string> seen;
    for (const auto& e : w.entities_)
      if (!seen.insert(e.id).second) throw LoadError(LoadError::Kind::duplicate_id, "duplicate entity id: " + e.id);
    std::set<std::string> seen_pred;
    for (const auto& p : w.predicates_) {
      if (p.family.empty()) throw LoadError(LoadError::Kind::parse, "predicate without family: " + p.id);
      if (!seen_pred.insert(p.id).second) throw LoadError(LoadError::Kind::duplicate_id, "duplicate predicate id: " + p.id);
    }
  }
  w.index();
  for (auto& edge : edges_) {
    if (!w.has_entity(edge.source))
      throw LoadError(LoadError::Kind::dangling_reference, "edge source not found: " + edge.source);
    if (!w.has_entity(edge.value))
      throw LoadError(LoadError::Kind::dangling_reference, "edge value not found: " + edge.value);
    if (!w.find_predicate(edge.predicate))
      throw LoadError(LoadError::Kind::dangling_reference, "edge predicate not found: " + edge.predicate);
    w.entities_[w.entity_index_.at(edge.source)].attributes.push_back({edge.predicate, edge.value});
  }
  for (auto& v : abstract_) {
    if (!w.has_entity(v)) throw LoadError(LoadError::Kind::dangling_reference, "abstract value not found: " + v);
    w.abstract_values_.insert(v);
  }
  if (abstract_.empty())
    for (const auto& v : kDefaultAbstractValues)
      if (w.has_entity(v)) w.abstract_values_.insert(v);
  if (w.bias_prone_types_.empty()) w.bias_prone_types_ = kDefaultBiasProneTypes;
  w.index();
  return w;
}

WorldFixture load_world(std::istream& in) {
  WorldBuilder b;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = trim(line);
    if (body.empty() || body.front() == '#') continue;
    auto rec = json::parse(body.begin(), body.end(), nullptr, false);
    if (rec.is_discarded() || !rec.is_object())
      throw LoadError(LoadError::Kind::parse, "line " + std::to_string(lineno) + ": not a JSON object");
    const auto kind = required_string(rec, "kind", lineno);
    try {
      if (kind == "predicate") {
        b.add_predicate({required_string(rec, "id", lineno), required_string(rec, "family", lineno),
                         listing_from_string(rec.value("listed", std::string("neutral")), lineno)});
      } else if (kind == "entity") {
        Entity e;
        e.id = required_string(rec, "id", lineno);
        e.name = rec.value("name", e.id);
        e.class_name = rec.value("class", std::string());
        e.snippets = rec.value("snippets", std::vector<std::string>{});
        e.literals = rec.value("literals", std::map<std::string, std::string>{});
        b.add_entity(std::move(e));
      } else if (kind == "edge") {
        b.add_edge(required_string(rec, "source", lineno), required_string(rec, "predicate", lineno),
                   required_string(rec, "value", lineno));
      } else if (kind == "abstract_value") {
        b.add_abstract_value(required_string(rec, "entity", lineno));
      } else if (kind == "bias_prone_type") {
        b.add_bias_prone_type(required_string(rec, "class", lineno));
      } else if (kind == "distractor") {
        b.add_distractor(required_string(rec, "topic", lineno), required_string(rec, "snippet", lineno));
      } else if (kind == "famous_fact") {
        b.add_famous_fact({required_string(rec, "key", lineno), required_string(rec, "answer", lineno)});
      } else {
        throw LoadError(LoadError::Kind::parse, "line " + std::to_string(lineno) + ": unknown record kind \"" + kind + "\"");
      }
    } catch (const json::exception& e) {
      throw LoadError(LoadError::Kind::parse, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return std::move(b).build();
}

WorldFixture load_world(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw LoadError(LoadError::Kind::parse, "cannot open fixture: " + path.string());
  return load_world(in);
}

std::filesystem::path resolve_fixture_path(const std::string& name) {
  std::filesystem::path direct(name);
  if (std::filesystem::exists(direct)) return direct;
  if (const char* env = std::getenv("HYPEREYES_FIXTURE_PATH")) {
    std::stringstream ss(env);
    std::string dir;
    while (std::getline(ss, dir, ':')) {
      if (dir.empty()) continue;
      auto candidate = std::filesystem::path(dir) / name;
      if (std::filesystem::exists(candidate)) return candidate;
    }
  }
  return direct;
}

}  // namespace hypereyes
