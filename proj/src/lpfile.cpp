#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

#include "gridtopo/lpfile.hpp"

namespace gridtopo {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void put_num(std::ostream& os, double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  os << buf;
}

void put_expr(std::ostream& os, const std::vector<LinTerm>& terms) {
  if (terms.empty()) {
    os << " 0 x0";
    return;
  }
  for (const LinTerm& t : terms) {
    os << (t.c < 0 ? " - " : " + ");
    put_num(os, std::fabs(t.c));
    os << " x" << t.v;
  }
}

}  // namespace

std::string lp_file_text(const LpProblem& p, const std::vector<int>& binaries,
                         const std::string& name) {
  std::ostringstream os;
  os << "\\ " << name << "\n\\ objective constant ";
  put_num(os, p.c0);
  os << "\nMinimize\n obj:";
  std::vector<LinTerm> obj;
  for (int j = 0; j < (int)p.num_cols(); ++j)
    if (p.c[j] != 0.0) obj.push_back({p.c[j], j});
  put_expr(os, obj);
  os << "\nSubject To\n";
  for (size_t i = 0; i < p.rows.size(); ++i) {
    const LpRow& r = p.rows[i];
    if (r.lb == r.ub) {
      os << " r" << i << ":";
      put_expr(os, r.a);
      os << " = ";
      put_num(os, r.ub);
      os << "\n";
      continue;
    }
    if (r.lb > -kInf) {
      os << " r" << i << "l:";
      put_expr(os, r.a);
      os << " >= ";
      put_num(os, r.lb);
      os << "\n";
    }
    if (r.ub < kInf) {
      os << " r" << i << "u:";
      put_expr(os, r.a);
      os << " <= ";
      put_num(os, r.ub);
      os << "\n";
    }
  }
  os << "Bounds\n";
  for (int j = 0; j < (int)p.num_cols(); ++j) {
    double l = p.lb[j], u = p.ub[j];
    if (l == u) {
      os << " x" << j << " = ";
      put_num(os, l);
    } else if (l > -kInf && u < kInf) {
      os << " ";
      put_num(os, l);
      os << " <= x" << j << " <= ";
      put_num(os, u);
    } else if (l > -kInf) {
      os << " x" << j << " >= ";
      put_num(os, l);
    } else if (u < kInf) {
      os << " -infinity <= x" << j << " <= ";
      put_num(os, u);
    } else {
      os << " x" << j << " free";
    }
    os << "\n";
  }
  if (!binaries.empty()) {
    os << "Binary\n";
    for (int b : binaries) os << " x" << b;
    os << "\n";
  }
  os << "End\n";
  return os.str();
}

std::string lp_file_text(const MathModel& m) {
  return lp_file_text(lp_from_model(m), m.binaries);
}

bool bridge_enabled() { return std::getenv("GRIDTOPO_LP_BRIDGE") != nullptr; }

bool bridge_objective(const LpProblem& p, const std::vector<int>& binaries,
                      double* obj) {
  const char* cmd = std::getenv("GRIDTOPO_LP_BRIDGE");
  if (!cmd || !obj) return false;
  std::string path = "/tmp/gridtopo_bridge.lp";
  if (const char* tmp = std::getenv("TMPDIR")) path = std::string(tmp) + "/gridtopo_bridge.lp";
  {
    std::ofstream f(path);
    if (!f) return false;
    f << lp_file_text(p, binaries);
  }
  std::string out_path = path + ".out";
  std::string full = std::string(cmd) + " " + path + " > " + out_path + " 2>/dev/null";
  if (std::system(full.c_str()) != 0) return false;
  std::ifstream in(out_path);
  std::string line, last;
  while (std::getline(in, line))
    if (line.find_first_not_of(" \t\r") != std::string::npos) last = line;
  if (last.empty()) return false;
  const char* s = last.c_str();
  char* end = nullptr;
  while (*s && !(std::isdigit((unsigned char)*s) || *s == '-' || *s == '+' || *s == '.')) ++s;
  double v = std::strtod(s, &end);
  if (end == s) return false;
  *obj = v + p.c0;
  return true;
}

}  // namespace gridtopo
