#pragma once

#include <algorithm>
#include <initializer_list>
#include <set>
#include <string>
#include <vector>

namespace metapipe {

// Symbolic relation domain: a finite set of declared input-class tags.
// Tags name families of test groups ("add-cat", "add-insertions"); keeping
// domains symbolic makes emptiness of combined domains decidable.
class DomainSet {
 public:
  DomainSet() = default;
  DomainSet(std::initializer_list<std::string> classes) : classes_(classes) {}
  explicit DomainSet(std::set<std::string> classes) : classes_(std::move(classes)) {}

  static DomainSet of(std::vector<std::string> classes) {
    return DomainSet(std::set<std::string>(classes.begin(), classes.end()));
  }

  bool empty() const { return classes_.empty(); }
  std::size_t size() const { return classes_.size(); }
  bool contains(const std::string& cls) const { return classes_.count(cls) > 0; }

  void insert(const std::string& cls) { classes_.insert(cls); }

  bool subset_of(const DomainSet& other) const {
    return std::includes(other.classes_.begin(), other.classes_.end(),
                         classes_.begin(), classes_.end());
  }

  DomainSet union_with(const DomainSet& other) const {
    DomainSet out = *this;
    out.classes_.insert(other.classes_.begin(), other.classes_.end());
    return out;
  }

  DomainSet intersect(const DomainSet& other) const {
    DomainSet out;
    std::set_intersection(classes_.begin(), classes_.end(),
                          other.classes_.begin(), other.classes_.end(),
                          std::inserter(out.classes_, out.classes_.end()));
    return out;
  }

  DomainSet difference(const DomainSet& other) const {
    DomainSet out;
    std::set_difference(classes_.begin(), classes_.end(),
                        other.classes_.begin(), other.classes_.end(),
                        std::inserter(out.classes_, out.classes_.end()));
    return out;
  }

  const std::set<std::string>& classes() const { return classes_; }
  auto begin() const { return classes_.begin(); }
  auto end() const { return classes_.end(); }

  friend bool operator==(const DomainSet& a, const DomainSet& b) {
    return a.classes_ == b.classes_;
  }
  friend bool operator!=(const DomainSet& a, const DomainSet& b) { return !(a == b); }

  std::string to_string() const {
    std::string out = "{";
    bool first = true;
    for (const auto& c : classes_) {
      if (!first) out += ", ";
      out += c;
      first = false;
    }
    out += "}";
    return out;
  }

 private:
  std::set<std::string> classes_;
};

}  // namespace metapipe
