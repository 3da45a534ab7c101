#include "clayer/parser.hpp"

#include <cctype>
#include <cmath>
#include <optional>

#include "clayer/error.hpp"
#include "clayer/numeric_format.hpp"

namespace clayer {

namespace mp = boost::multiprecision;

double to_double(const Rational& value) {
  mp::cpp_int num = mp::numerator(value);
  const mp::cpp_int den = mp::denominator(value);
  if (num == 0) return 0.0;
  const bool negative = num < 0;
  if (negative) num = -num;

  // Scale so the integer quotient carries at least 54 significant bits.
  const long magnitude = static_cast<long>(mp::msb(num)) - static_cast<long>(mp::msb(den));
  const long shift = 54 - magnitude;
  mp::cpp_int scaled_num = shift >= 0 ? mp::cpp_int(num << shift) : num;
  mp::cpp_int scaled_den = shift >= 0 ? den : mp::cpp_int(den << -shift);
  mp::cpp_int quotient;
  mp::cpp_int remainder;
  mp::divide_qr(scaled_num, scaled_den, quotient, remainder);

  const long top_bit = static_cast<long>(mp::msb(quotient));
  const long exponent = top_bit - shift;  // value in [2^exponent, 2^(exponent+1))
  if (exponent > 1023) return negative ? -HUGE_VAL : HUGE_VAL;

  long keep = 53;
  if (exponent < -1022) keep = 53 - (-1022 - exponent);
  if (keep < 0) return negative ? -0.0 : 0.0;

  const long drop = top_bit + 1 - keep;
  mp::cpp_int mantissa = quotient >> drop;
  const bool round_bit = mp::bit_test(quotient, static_cast<unsigned>(drop - 1));
  const mp::cpp_int low_mask = (mp::cpp_int(1) << (drop - 1)) - 1;
  const bool sticky = (quotient & low_mask) != 0 || remainder != 0;
  if (round_bit && (sticky || mp::bit_test(mantissa, 0))) ++mantissa;

  double result = std::ldexp(mantissa.convert_to<double>(), static_cast<int>(drop - shift));
  return negative ? -result : result;
}

Rational to_rational(double value) {
  if (value == 0.0) return Rational(0);
  int exponent = 0;
  const double fraction = std::frexp(value, &exponent);
  const auto mantissa = static_cast<long long>(std::ldexp(fraction, 53));
  Rational out{mp::cpp_int(mantissa)};
  const int power = exponent - 53;
  if (power > 0) {
    out *= Rational(mp::cpp_int(1) << power);
  } else if (power < 0) {
    out /= Rational(mp::cpp_int(1) << -power);
  }
  return out;
}

namespace {

void push_constraint(std::vector<LinearConstraint>& out, const AffineForm& diff, bool strict) {
  std::vector<Term> terms;
  for (const auto& [column, coefficient] : diff.coefficients) {
    if (coefficient != 0) terms.push_back({column, to_double(coefficient)});
  }
  out.emplace_back(std::move(terms), to_double(diff.constant), strict);
}

AffineForm difference(const AffineForm& a, const AffineForm& b) {
  AffineForm out = a;
  for (const auto& [column, coefficient] : b.coefficients) {
    out.coefficients[column] -= coefficient;
  }
  out.constant -= b.constant;
  return out;
}

constexpr int kMaxDecimalExponent = 1000;

struct Token {
  enum class Kind { number, name, plus, minus, star, comparator, end };
  Kind kind = Kind::end;
  std::string_view text;
  std::size_t column = 0;  // 1-based
  Rational number;
  Comparator cmp = Comparator::equal;
};

class LineParser {
 public:
  LineParser(std::string_view line, std::size_t line_no, const FeatureSchema& schema)
      : line_(line), line_no_(line_no), schema_(schema) {
    advance();
  }

  std::vector<LinearConstraint> parse_statement() {
    AffineForm lhs = parse_affine();
    if (current_.kind != Token::Kind::comparator) {
      fail(current_.column, current_.kind == Token::Kind::end
                                ? "expected a comparator (<, <=, =, >=, >)"
                                : "unexpected '" + std::string(current_.text) + "'");
    }
    const Comparator cmp = current_.cmp;
    advance();
    AffineForm rhs = parse_affine();
    if (current_.kind == Token::Kind::comparator) {
      fail(current_.column, "chained comparisons are not supported");
    }
    if (current_.kind != Token::Kind::end) {
      fail(current_.column, "unexpected '" + std::string(current_.text) + "'");
    }
    return normalize_constraint(lhs, cmp, rhs);
  }

 private:
  [[noreturn]] void fail(std::size_t column, const std::string& message) const {
    throw SyntaxError(line_no_, column, message);
  }

  AffineForm parse_affine() {
    AffineForm form;
    bool negate = false;
    if (current_.kind == Token::Kind::plus || current_.kind == Token::Kind::minus) {
      negate = current_.kind == Token::Kind::minus;
      advance();
    }
    parse_term(form, negate);
    while (current_.kind == Token::Kind::plus || current_.kind == Token::Kind::minus) {
      negate = current_.kind == Token::Kind::minus;
      advance();
      // Allow an explicit sign on the term itself, e.g. `x1 - -2*x2`.
      if (current_.kind == Token::Kind::plus || current_.kind == Token::Kind::minus) {
        if (current_.kind == Token::Kind::minus) negate = !negate;
        advance();
      }
      parse_term(form, negate);
    }
    return form;
  }

  void parse_term(AffineForm& form, bool negate) {
    Rational factor = negate ? -1 : 1;
    std::optional<std::size_t> column;
    while (true) {
      if (current_.kind == Token::Kind::number) {
        factor *= current_.number;
      } else if (current_.kind == Token::Kind::name) {
        if (column) fail(current_.column, "nonlinear term: product of two features");
        auto found = schema_.find(current_.text);
        if (!found) {
          throw Error(ErrorKind::unknown_feature,
                      "line " + std::to_string(line_no_) + ", column " +
                          std::to_string(current_.column) + ": unknown feature '" +
                          std::string(current_.text) + "'");
        }
        if (!schema_.is_continuous(*found)) {
          throw Error(ErrorKind::categorical_in_constraint,
                      "line " + std::to_string(line_no_) + ", column " +
                          std::to_string(current_.column) + ": feature '" +
                          std::string(current_.text) + "' is categorical");
        }
        column = *found;
      } else {
        fail(current_.column, current_.kind == Token::Kind::end
                                  ? "expected a number or feature name"
                                  : "unexpected '" + std::string(current_.text) + "'");
      }
      advance();
      if (current_.kind != Token::Kind::star) break;
      advance();
    }
    if (column) {
      form.coefficients[*column] += factor;
    } else {
      form.constant += factor;
    }
  }

  void advance() {
    while (pos_ < line_.size() && (line_[pos_] == ' ' || line_[pos_] == '\t')) ++pos_;
    current_ = Token{};
    current_.column = pos_ + 1;
    if (pos_ >= line_.size()) {
      current_.kind = Token::Kind::end;
      return;
    }
    const std::size_t start = pos_;
    const char c = line_[pos_];
    auto is_digit = [](char ch) { return ch >= '0' && ch <= '9'; };
    if (is_digit(c) || (c == '.' && pos_ + 1 < line_.size() && is_digit(line_[pos_ + 1]))) {
      lex_number();
      current_.text = line_.substr(start, pos_ - start);
      return;
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (pos_ < line_.size() &&
             (std::isalnum(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_')) {
        ++pos_;
      }
      current_.kind = Token::Kind::name;
      current_.text = line_.substr(start, pos_ - start);
      return;
    }
    ++pos_;
    auto next_is = [&](char ch) {
      if (pos_ < line_.size() && line_[pos_] == ch) {
        ++pos_;
        return true;
      }
      return false;
    };
    switch (c) {
      case '+': current_.kind = Token::Kind::plus; break;
      case '-': current_.kind = Token::Kind::minus; break;
      case '*': current_.kind = Token::Kind::star; break;
      case '<':
        current_.kind = Token::Kind::comparator;
        current_.cmp = next_is('=') ? Comparator::less_equal : Comparator::less;
        break;
      case '>':
        current_.kind = Token::Kind::comparator;
        current_.cmp = next_is('=') ? Comparator::greater_equal : Comparator::greater;
        break;
      case '=':
        next_is('=');
        current_.kind = Token::Kind::comparator;
        current_.cmp = Comparator::equal;
        break;
      case '!':
        fail(start + 1, next_is('=') ? "unsupported comparator '!='" : "unexpected '!'");
      default:
        fail(start + 1, "unexpected character '" + std::string(1, c) + "'");
    }
    current_.text = line_.substr(start, pos_ - start);
  }

  void lex_number() {
    const std::size_t start = pos_;
    std::string digits;
    long exponent = 0;
    auto is_digit = [](char ch) { return ch >= '0' && ch <= '9'; };
    while (pos_ < line_.size() && is_digit(line_[pos_])) digits += line_[pos_++];
    if (pos_ < line_.size() && line_[pos_] == '.') {
      ++pos_;
      while (pos_ < line_.size() && is_digit(line_[pos_])) {
        digits += line_[pos_++];
        --exponent;
      }
    }
    if (pos_ < line_.size() && (line_[pos_] == 'e' || line_[pos_] == 'E')) {
      std::size_t look = pos_ + 1;
      bool negative = false;
      if (look < line_.size() && (line_[look] == '+' || line_[look] == '-')) {
        negative = line_[look] == '-';
        ++look;
      }
      if (look >= line_.size() || !is_digit(line_[look])) {
        fail(start + 1, "malformed exponent in number");
      }
      long value = 0;
      while (look < line_.size() && is_digit(line_[look])) {
        value = std::min<long>(value * 10 + (line_[look] - '0'), 100000);
        ++look;
      }
      exponent += negative ? -value : value;
      pos_ = look;
    }
    if (pos_ < line_.size() &&
        (std::isalpha(static_cast<unsigned char>(line_[pos_])) || line_[pos_] == '_')) {
      fail(pos_ + 1, "number immediately followed by a name (use '*')");
    }
    const auto first = digits.find_first_not_of('0');
    if (first == std::string::npos) {
      current_.number = 0;
    } else {
      digits.erase(0, first);
      const long magnitude = exponent + static_cast<long>(digits.size());
      if (magnitude > kMaxDecimalExponent || magnitude < -kMaxDecimalExponent) {
        fail(start + 1, "number out of range");
      }
      Rational value{mp::cpp_int(digits)};
      if (exponent > 0) {
        value *= Rational(mp::pow(mp::cpp_int(10), static_cast<unsigned>(exponent)));
      } else if (exponent < 0) {
        value /= Rational(mp::pow(mp::cpp_int(10), static_cast<unsigned>(-exponent)));
      }
      if (std::isinf(to_double(value))) fail(start + 1, "number out of range");
      current_.number = std::move(value);
    }
    current_.kind = Token::Kind::number;
  }

  std::string_view line_;
  std::size_t line_no_;
  const FeatureSchema& schema_;
  std::size_t pos_ = 0;
  Token current_;
};

}  // namespace

std::vector<LinearConstraint> normalize_constraint(const AffineForm& lhs, Comparator cmp,
                                                   const AffineForm& rhs) {
  std::vector<LinearConstraint> out;
  switch (cmp) {
    case Comparator::greater_equal: push_constraint(out, difference(lhs, rhs), false); break;
    case Comparator::greater: push_constraint(out, difference(lhs, rhs), true); break;
    case Comparator::less_equal: push_constraint(out, difference(rhs, lhs), false); break;
    case Comparator::less: push_constraint(out, difference(rhs, lhs), true); break;
    case Comparator::equal:
      push_constraint(out, difference(lhs, rhs), false);
      push_constraint(out, difference(rhs, lhs), false);
      break;
  }
  return out;
}

AffineForm to_affine(const LinearConstraint& constraint) {
  AffineForm form;
  for (const auto& term : constraint.terms()) {
    form.coefficients[term.column] = to_rational(term.weight);
  }
  form.constant = to_rational(constraint.bias());
  return form;
}

ConstraintSet parse_constraints(std::string_view text, const FeatureSchema& schema) {
  ConstraintSet out(schema);
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin <= text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") != std::string_view::npos) {
      for (auto& constraint : LineParser(line, line_no, schema).parse_statement()) {
        out.add(std::move(constraint));
      }
    }
    if (end == text.size()) break;
    begin = end + 1;
  }
  return out;
}

std::string format_constraint(const LinearConstraint& constraint, const FeatureSchema& schema) {
  std::string out;
  bool first = true;
  for (const auto& term : constraint.terms()) {
    const bool negative = term.weight < 0;
    if (first) {
      if (negative) out += '-';
    } else {
      out += negative ? " - " : " + ";
    }
    out += format_double(std::fabs(term.weight));
    out += '*';
    out += schema[term.column].name;
    first = false;
  }
  const double bias = constraint.bias();
  if (first) {
    out += format_double(bias);
  } else {
    out += bias < 0 ? " - " : " + ";
    out += format_double(std::fabs(bias));
  }
  out += constraint.strict() ? " > 0" : " >= 0";
  return out;
}

std::string format_constraints(const ConstraintSet& constraints) {
  std::string out;
  for (const auto& c : constraints) {
    out += format_constraint(c, constraints.schema());
    out += '\n';
  }
  return out;
}

}  // namespace clayer
