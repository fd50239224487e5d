#include "safelearn/formula.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <string>
#include <utility>

#include "safelearn/error.hpp"

namespace safelearn::stl {

bool Formula::operator==(const Formula& other) const {
  if (kind != other.kind) return false;
  if (kind == Kind::Predicate && !(pred == other.pred)) return false;
  if (is_temporal(kind) && !(interval == other.interval)) return false;
  return children == other.children;
}

namespace {

void check_interval(Interval iv) {
  if (iv.lo < 0 || iv.hi < 0) {
    throw IntervalError("interval bounds must be non-negative, got [" + std::to_string(iv.lo) +
                        "," + std::to_string(iv.hi) + "]");
  }
  if (iv.lo > iv.hi) {
    throw IntervalError("interval lower bound exceeds upper bound in [" +
                        std::to_string(iv.lo) + "," + std::to_string(iv.hi) + "]");
  }
}

Formula make(Kind kind, std::vector<Formula> children, Interval iv = {}) {
  Formula f;
  f.kind = kind;
  f.interval = iv;
  f.children = std::move(children);
  return f;
}

}  // namespace

Formula predicate(Dim dim, Cmp cmp, double threshold) {
  Formula f;
  f.kind = Kind::Predicate;
  f.pred = Predicate{dim, cmp, threshold};
  return f;
}

Formula negation(Formula child) {
  std::vector<Formula> c;
  c.push_back(std::move(child));
  return make(Kind::Not, std::move(c));
}

Formula conjunction(Formula lhs, Formula rhs) {
  std::vector<Formula> c;
  c.push_back(std::move(lhs));
  c.push_back(std::move(rhs));
  return make(Kind::And, std::move(c));
}

Formula disjunction(Formula lhs, Formula rhs) {
  std::vector<Formula> c;
  c.push_back(std::move(lhs));
  c.push_back(std::move(rhs));
  return make(Kind::Or, std::move(c));
}

Formula globally(Interval iv, Formula child) {
  check_interval(iv);
  std::vector<Formula> c;
  c.push_back(std::move(child));
  return make(Kind::Globally, std::move(c), iv);
}

Formula eventually(Interval iv, Formula child) {
  check_interval(iv);
  std::vector<Formula> c;
  c.push_back(std::move(child));
  return make(Kind::Eventually, std::move(c), iv);
}

Formula until(Formula lhs, Interval iv, Formula rhs) {
  check_interval(iv);
  std::vector<Formula> c;
  c.push_back(std::move(lhs));
  c.push_back(std::move(rhs));
  return make(Kind::Until, std::move(c), iv);
}

int arity(Kind kind) noexcept {
  switch (kind) {
    case Kind::Predicate: return 0;
    case Kind::Not:
    case Kind::Globally:
    case Kind::Eventually: return 1;
    case Kind::And:
    case Kind::Or:
    case Kind::Until: return 2;
  }
  return 0;
}

bool is_temporal(Kind kind) noexcept {
  return kind == Kind::Globally || kind == Kind::Eventually || kind == Kind::Until;
}

int horizon(const Formula& f) {
  switch (f.kind) {
    case Kind::Predicate: return 0;
    case Kind::Not: return horizon(f.children[0]);
    case Kind::And:
    case Kind::Or: return std::max(horizon(f.children[0]), horizon(f.children[1]));
    case Kind::Globally:
    case Kind::Eventually: return f.interval.hi + horizon(f.children[0]);
    case Kind::Until:
      return f.interval.hi + std::max(horizon(f.children[0]), horizon(f.children[1]));
  }
  return 0;
}

int depth(const Formula& f) {
  int d = 0;
  for (const auto& c : f.children) d = std::max(d, depth(c));
  return d + 1;
}

int node_count(const Formula& f) {
  int n = 1;
  for (const auto& c : f.children) n += node_count(c);
  return n;
}

bool is_well_formed(const Formula& f, int max_depth, int max_time) {
  if (max_depth < 1) return false;
  if (static_cast<int>(f.children.size()) != arity(f.kind)) return false;
  if (is_temporal(f.kind)) {
    if (f.interval.lo < 0 || f.interval.lo > f.interval.hi) return false;
    if (max_time >= 0 && f.interval.hi > max_time) return false;
  }
  return std::all_of(f.children.begin(), f.children.end(), [&](const Formula& c) {
    return is_well_formed(c, max_depth - 1, max_time);
  });
}

std::string_view to_string(Cmp cmp) noexcept {
  switch (cmp) {
    case Cmp::Lt: return "<";
    case Cmp::Le: return "<=";
    case Cmp::Gt: return ">";
    case Cmp::Ge: return ">=";
  }
  return "?";
}

std::string_view to_string(Dim dim) noexcept { return dim == Dim::X ? "x" : "y"; }

namespace {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string format_interval(Interval iv) {
  return "[" + std::to_string(iv.lo) + "," + std::to_string(iv.hi) + "]";
}

void format_into(const Formula& f, std::string& out) {
  switch (f.kind) {
    case Kind::Predicate:
      out += '(';
      out += to_string(f.pred.dim);
      out += ' ';
      out += to_string(f.pred.cmp);
      out += ' ';
      out += format_number(f.pred.threshold);
      out += ')';
      return;
    case Kind::Not:
      out += '!';
      format_into(f.children[0], out);
      return;
    case Kind::And:
    case Kind::Or:
      out += '(';
      format_into(f.children[0], out);
      out += f.kind == Kind::And ? " & " : " | ";
      format_into(f.children[1], out);
      out += ')';
      return;
    case Kind::Globally:
    case Kind::Eventually:
      out += f.kind == Kind::Globally ? 'G' : 'F';
      out += format_interval(f.interval);
      format_into(f.children[0], out);
      return;
    case Kind::Until:
      out += '(';
      format_into(f.children[0], out);
      out += " U";
      out += format_interval(f.interval);
      out += ' ';
      format_into(f.children[1], out);
      out += ')';
      return;
  }
}

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  Formula parse() {
    Formula f = formula();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return f;
  }

 private:
  std::string_view text_;
  std::size_t pos_ = 0;

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, pos_); }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  void expect(char c) {
    if (peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  int integer() {
    skip_ws();
    int value = 0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || value < 0 || (ptr != first && *first == '-')) {
      fail("expected non-negative integer");
    }
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

  double number() {
    skip_ws();
    std::size_t start = pos_;
    // from_chars rejects a leading '+'
    if (pos_ < text_.size() && text_[pos_] == '+') ++pos_;
    double value = 0.0;
    const char* first = text_.data() + pos_;
    const char* last = text_.data() + text_.size();
    auto [ptr, ec] = std::from_chars(first, last, value, std::chars_format::general);
    if (ec != std::errc{} || ptr == first) {
      pos_ = start;
      fail("expected number");
    }
    pos_ += static_cast<std::size_t>(ptr - first);
    return value;
  }

  Interval interval() {
    expect('[');
    int lo = integer();
    expect(',');
    int hi = integer();
    expect(']');
    if (lo > hi) {
      throw IntervalError("interval lower bound exceeds upper bound in [" + std::to_string(lo) +
                          "," + std::to_string(hi) + "]");
    }
    return {lo, hi};
  }

  bool at_predicate() {
    // after '(' : dim followed by a comparator
    std::size_t save = pos_;
    char d = peek();
    bool result = false;
    if (d == 'x' || d == 'y') {
      ++pos_;
      char c = peek();
      result = c == '<' || c == '>';
    }
    pos_ = save;
    return result;
  }

  Formula atom() {
    Dim dim = peek() == 'x' ? Dim::X : Dim::Y;
    ++pos_;
    char c = peek();
    ++pos_;
    bool eq = pos_ < text_.size() && text_[pos_] == '=';
    if (eq) ++pos_;
    Cmp cmp = c == '<' ? (eq ? Cmp::Le : Cmp::Lt) : (eq ? Cmp::Ge : Cmp::Gt);
    double threshold = number();
    expect(')');
    return predicate(dim, cmp, threshold);
  }

  Formula formula() {
    char c = peek();
    switch (c) {
      case '!':
        ++pos_;
        return negation(formula());
      case 'G':
      case 'F': {
        ++pos_;
        Interval iv = interval();
        Formula child = formula();
        return c == 'G' ? globally(iv, std::move(child)) : eventually(iv, std::move(child));
      }
      case '(': {
        ++pos_;
        if (at_predicate()) return atom();
        Formula lhs = formula();
        char op = peek();
        if (op == '&' || op == '|') {
          ++pos_;
          Formula rhs = formula();
          expect(')');
          return op == '&' ? conjunction(std::move(lhs), std::move(rhs))
                           : disjunction(std::move(lhs), std::move(rhs));
        }
        if (op == 'U') {
          ++pos_;
          Interval iv = interval();
          Formula rhs = formula();
          expect(')');
          return until(std::move(lhs), iv, std::move(rhs));
        }
        fail("expected '&', '|' or 'U'");
      }
      case '\0': fail("unexpected end of input");
      default: fail(std::string("unexpected character '") + c + "'");
    }
  }
};

}  // namespace

std::string format_formula(const Formula& f) {
  std::string out;
  format_into(f, out);
  return out;
}

Formula parse_formula(std::string_view text) { return Parser(text).parse(); }

}  // namespace safelearn::stl
