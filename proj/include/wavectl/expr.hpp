#ifndef WAVECTL_EXPR_HPP
#define WAVECTL_EXPR_HPP

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <sstream>
#include <string>
#include <string_view>

#include "wavectl/common.hpp"

namespace wavectl
{
    // Closed arithmetic expressions in the variables t and x. Coefficient
    // functions enter the toolkit as data, not code: a system description in
    // a config file carries strings like "1 + x^2" or "sin(pi*(t-x))".
    //
    // Grammar: real literals, t, x, pi, + - * / ^, unary minus, and the
    // functions sin cos exp log sqrt abs. Precedence ^ > unary- > */ > +-,
    // binary operators associate left. Values are immutable after parsing;
    // eval is reentrant.
    class Expr
    {
        enum class Op
        {
            Num, VarT, VarX, Pi,
            Neg, Add, Sub, Mul, Div, Pow,
            Sin, Cos, ExpF, Log, Sqrt, Abs
        };

        struct Node
        {
            Op op;
            double value = 0.0;
            std::shared_ptr<const Node> lhs, rhs;
        };
        using NodePtr = std::shared_ptr<const Node>;

    public:
        Expr() : root_(make(Op::Num, 0.0)) {}

        static Expr parse(std::string_view src)
        {
            Parser p{src, 0};
            NodePtr e = p.sum();
            p.skip_ws();
            if (p.pos != src.size())
                throw ParseError("syntax error at offset " + std::to_string(p.pos) +
                                     ": unexpected '" + std::string(1, src[p.pos]) + "'",
                                 p.pos, "operator or end of input");
            return Expr(e);
        }

        static Expr constant(double v) { return Expr(make(Op::Num, v)); }

        double eval(double t, double x) const { return eval_node(*root_, t, x); }
        double operator()(double t, double x) const { return eval(t, x); }

        bool depends_on_t() const { return depends(*root_, Op::VarT); }
        bool depends_on_x() const { return depends(*root_, Op::VarX); }

        /// Minimal-parenthesis rendering; parse(str()) rebuilds the same tree.
        std::string str() const
        {
            std::ostringstream os;
            print(os, *root_, 0);
            return os.str();
        }

        bool same_structure(const Expr& other) const { return eq(*root_, *other.root_); }

    private:
        explicit Expr(NodePtr n) : root_(std::move(n)) {}

        static NodePtr make(Op op, double v = 0.0, NodePtr l = nullptr, NodePtr r = nullptr)
        {
            auto n = std::make_shared<Node>();
            n->op = op;
            n->value = v;
            n->lhs = std::move(l);
            n->rhs = std::move(r);
            return n;
        }

        struct Parser
        {
            std::string_view src;
            std::size_t pos;

            void skip_ws()
            {
                while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos])))
                    ++pos;
            }

            bool eat(char c)
            {
                skip_ws();
                if (pos < src.size() && src[pos] == c)
                {
                    ++pos;
                    return true;
                }
                return false;
            }

            char peek()
            {
                skip_ws();
                return pos < src.size() ? src[pos] : '\0';
            }

            [[noreturn]] void fail(const std::string& expected)
            {
                skip_ws();
                std::string got = pos < src.size() ? "'" + std::string(1, src[pos]) + "'"
                                                   : "end of input";
                throw ParseError("syntax error at offset " + std::to_string(pos) +
                                     ": expected " + expected + ", got " + got,
                                 pos, expected);
            }

            NodePtr sum()
            {
                NodePtr e = term();
                for (;;)
                {
                    if (eat('+')) e = make(Op::Add, 0, e, term());
                    else if (eat('-')) e = make(Op::Sub, 0, e, term());
                    else return e;
                }
            }

            NodePtr term()
            {
                NodePtr e = unary();
                for (;;)
                {
                    if (eat('*')) e = make(Op::Mul, 0, e, unary());
                    else if (eat('/')) e = make(Op::Div, 0, e, unary());
                    else return e;
                }
            }

            NodePtr unary()
            {
                if (eat('-')) return make(Op::Neg, 0, unary());
                return power();
            }

            NodePtr power()
            {
                NodePtr e = atom();
                while (eat('^'))
                {
                    // allow a sign on the exponent: 2^-3
                    NodePtr rhs = eat('-') ? make(Op::Neg, 0, atom()) : atom();
                    e = make(Op::Pow, 0, e, rhs);
                }
                return e;
            }

            NodePtr atom()
            {
                skip_ws();
                if (pos >= src.size()) fail("number, variable, function or '('");
                char c = src[pos];
                if (c == '(')
                {
                    ++pos;
                    NodePtr e = sum();
                    if (!eat(')')) fail("')'");
                    return e;
                }
                if (std::isdigit(static_cast<unsigned char>(c)) || c == '.')
                    return number();
                if (std::isalpha(static_cast<unsigned char>(c)))
                    return identifier();
                fail("number, variable, function or '('");
            }

            NodePtr number()
            {
                const char* begin = src.data() + pos;
                char* end = nullptr;
                double v = std::strtod(begin, &end);
                if (end == begin) fail("number");
                pos += std::size_t(end - begin);
                return make(Op::Num, v);
            }

            NodePtr identifier()
            {
                std::size_t start = pos;
                while (pos < src.size() &&
                       (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
                    ++pos;
                std::string name(src.substr(start, pos - start));
                if (name == "t") return make(Op::VarT);
                if (name == "x") return make(Op::VarX);
                if (name == "pi") return make(Op::Pi);

                Op fn;
                if (name == "sin") fn = Op::Sin;
                else if (name == "cos") fn = Op::Cos;
                else if (name == "exp") fn = Op::ExpF;
                else if (name == "log") fn = Op::Log;
                else if (name == "sqrt") fn = Op::Sqrt;
                else if (name == "abs") fn = Op::Abs;
                else
                    throw ParseError("unknown identifier '" + name + "' at offset " +
                                         std::to_string(start),
                                     start, "t, x, pi or a function name");
                if (!eat('(')) fail("'(' after function name");
                NodePtr arg = sum();
                if (!eat(')')) fail("')'");
                return make(fn, 0, arg);
            }
        };

        static double eval_node(const Node& n, double t, double x)
        {
            switch (n.op)
            {
                case Op::Num:  return n.value;
                case Op::VarT: return t;
                case Op::VarX: return x;
                case Op::Pi:   return M_PI;
                case Op::Neg:  return -eval_node(*n.lhs, t, x);
                case Op::Add:  return eval_node(*n.lhs, t, x) + eval_node(*n.rhs, t, x);
                case Op::Sub:  return eval_node(*n.lhs, t, x) - eval_node(*n.rhs, t, x);
                case Op::Mul:  return eval_node(*n.lhs, t, x) * eval_node(*n.rhs, t, x);
                case Op::Div:
                {
                    double den = eval_node(*n.rhs, t, x);
                    if (den == 0.0)
                        throw DomainError("division by zero in " + to_string(n), to_string(n));
                    return eval_node(*n.lhs, t, x) / den;
                }
                case Op::Pow:
                {
                    double b = eval_node(*n.lhs, t, x);
                    double e = eval_node(*n.rhs, t, x);
                    double v = std::pow(b, e);
                    if (!std::isfinite(v))
                        throw DomainError("pow out of domain in " + to_string(n), to_string(n));
                    return v;
                }
                case Op::Sin:  return std::sin(eval_node(*n.lhs, t, x));
                case Op::Cos:  return std::cos(eval_node(*n.lhs, t, x));
                case Op::ExpF: return std::exp(eval_node(*n.lhs, t, x));
                case Op::Log:
                {
                    double a = eval_node(*n.lhs, t, x);
                    if (a <= 0.0)
                        throw DomainError("log of non-positive value in " + to_string(n),
                                          to_string(n));
                    return std::log(a);
                }
                case Op::Sqrt:
                {
                    double a = eval_node(*n.lhs, t, x);
                    if (a < 0.0)
                        throw DomainError("sqrt of negative value in " + to_string(n),
                                          to_string(n));
                    return std::sqrt(a);
                }
                case Op::Abs: return std::fabs(eval_node(*n.lhs, t, x));
            }
            return 0.0; // unreachable
        }

        static bool depends(const Node& n, Op var)
        {
            if (n.op == var) return true;
            if (n.lhs && depends(*n.lhs, var)) return true;
            if (n.rhs && depends(*n.rhs, var)) return true;
            return false;
        }

        static bool eq(const Node& a, const Node& b)
        {
            if (a.op != b.op) return false;
            if (a.op == Op::Num && a.value != b.value) return false;
            if (!!a.lhs != !!b.lhs || !!a.rhs != !!b.rhs) return false;
            if (a.lhs && !eq(*a.lhs, *b.lhs)) return false;
            if (a.rhs && !eq(*a.rhs, *b.rhs)) return false;
            return true;
        }

        static int prec(Op op)
        {
            switch (op)
            {
                case Op::Add: case Op::Sub: return 1;
                case Op::Mul: case Op::Div: return 2;
                case Op::Neg: return 3;
                case Op::Pow: return 4;
                default: return 5;
            }
        }

        static void print(std::ostream& os, const Node& n, int parent_prec)
        {
            const int p = prec(n.op);
            const bool parens = p < parent_prec;
            if (parens) os << '(';
            switch (n.op)
            {
                case Op::Num:
                {
                    char buf[32];
                    std::snprintf(buf, sizeof buf, "%.17g", n.value);
                    os << buf;
                    break;
                }
                case Op::VarT: os << 't'; break;
                case Op::VarX: os << 'x'; break;
                case Op::Pi:   os << "pi"; break;
                case Op::Neg:  os << '-'; print(os, *n.lhs, p + 1); break;
                case Op::Add:  print(os, *n.lhs, p); os << " + "; print(os, *n.rhs, p + 1); break;
                case Op::Sub:  print(os, *n.lhs, p); os << " - "; print(os, *n.rhs, p + 1); break;
                case Op::Mul:  print(os, *n.lhs, p); os << "*"; print(os, *n.rhs, p + 1); break;
                case Op::Div:  print(os, *n.lhs, p); os << "/"; print(os, *n.rhs, p + 1); break;
                case Op::Pow:  print(os, *n.lhs, p + 1); os << "^"; print(os, *n.rhs, p + 1); break;
                case Op::Sin:  os << "sin(";  print(os, *n.lhs, 0); os << ')'; break;
                case Op::Cos:  os << "cos(";  print(os, *n.lhs, 0); os << ')'; break;
                case Op::ExpF: os << "exp(";  print(os, *n.lhs, 0); os << ')'; break;
                case Op::Log:  os << "log(";  print(os, *n.lhs, 0); os << ')'; break;
                case Op::Sqrt: os << "sqrt("; print(os, *n.lhs, 0); os << ')'; break;
                case Op::Abs:  os << "abs(";  print(os, *n.lhs, 0); os << ')'; break;
            }
            if (parens) os << ')';
        }

        static std::string to_string(const Node& n)
        {
            std::ostringstream os;
            print(os, n, 0);
            return os.str();
        }

        NodePtr root_;
    };
} // namespace wavectl

#endif
