#include "gridtopo/matpower.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace gridtopo {

namespace {

struct Cell {
  double value;
  int line;
  int col;
};

using Row = std::vector<Cell>;

struct Scanner {
  const std::string& src;
  const std::string& file;
  size_t pos = 0;
  int line = 1;
  int col = 1;

  bool eof() const { return pos >= src.size(); }
  char peek() const { return src[pos]; }

  char get() {
    char c = src[pos++];
    if (c == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    return c;
  }

  void skip_ws_and_comments() {
    while (!eof()) {
      char c = peek();
      if (c == '%') {
        while (!eof() && peek() != '\n') get();
      } else if (c == '.' && pos + 2 < src.size() && src[pos + 1] == '.' && src[pos + 2] == '.') {
        // MATLAB line continuation
        while (!eof() && peek() != '\n') get();
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        get();
      } else {
        return;
      }
    }
  }

  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(file, line, col, msg); }
};

bool is_ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool is_ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '.'; }

std::string read_ident(Scanner& s) {
  std::string out;
  while (!s.eof() && is_ident_char(s.peek())) out.push_back(s.get());
  return out;
}

Cell read_number(Scanner& s) {
  s.skip_ws_and_comments();
  if (s.eof()) s.fail("unexpected end of file, expected a number");
  Cell cell{0.0, s.line, s.col};
  std::string tok;
  while (!s.eof()) {
    char c = s.peek();
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.' ||
        c == 'e' || c == 'E' || std::isalpha(static_cast<unsigned char>(c))) {
      // letters admitted so Inf/NaN parse as one token
      if ((c == '+' || c == '-') && !tok.empty()) {
        char prev = tok.back();
        if (prev != 'e' && prev != 'E') break;
      }
      tok.push_back(s.get());
    } else {
      break;
    }
  }
  if (tok == "Inf" || tok == "inf") {
    cell.value = std::numeric_limits<double>::infinity();
    return cell;
  }
  if (tok == "-Inf" || tok == "-inf") {
    cell.value = -std::numeric_limits<double>::infinity();
    return cell;
  }
  char* end = nullptr;
  cell.value = std::strtod(tok.c_str(), &end);
  if (tok.empty() || end != tok.c_str() + tok.size())
    throw ParseError(s.file, cell.line, cell.col, "bad numeric token '" + tok + "'");
  return cell;
}

std::vector<Row> read_matrix(Scanner& s) {
  s.skip_ws_and_comments();
  if (s.eof() || s.peek() != '[') s.fail("expected '[' to open a matrix");
  s.get();
  std::vector<Row> rows;
  Row cur;
  for (;;) {
    s.skip_ws_and_comments();
    if (s.eof()) s.fail("unterminated matrix");
    char c = s.peek();
    if (c == ']') {
      s.get();
      if (!cur.empty()) rows.push_back(std::move(cur));
      break;
    }
    if (c == ';' || c == '\n') {
      s.get();
      if (!cur.empty()) {
        rows.push_back(std::move(cur));
        cur.clear();
      }
      continue;
    }
    if (c == ',') {
      s.get();
      continue;
    }
    cur.push_back(read_number(s));
  }
  s.skip_ws_and_comments();
  if (!s.eof() && s.peek() == ';') s.get();
  return rows;
}

double read_scalar(Scanner& s) {
  Cell c = read_number(s);
  s.skip_ws_and_comments();
  if (!s.eof() && s.peek() == ';') s.get();
  return c.value;
}

std::string read_quoted(Scanner& s) {
  s.skip_ws_and_comments();
  if (s.eof() || s.peek() != '\'') s.fail("expected a quoted string");
  s.get();
  std::string out;
  while (!s.eof() && s.peek() != '\'') out.push_back(s.get());
  if (s.eof()) s.fail("unterminated string");
  s.get();
  s.skip_ws_and_comments();
  if (!s.eof() && s.peek() == ';') s.get();
  return out;
}

void check_width(const Scanner& s, const std::string& table, size_t row_idx, const Row& row,
                 size_t need) {
  if (row.size() < need) {
    int line = row.empty() ? s.line : row.front().line;
    throw ParseError(s.file, line, row.empty() ? 1 : row.front().col,
                     table + " row " + std::to_string(row_idx + 1) + ": expected at least " +
                         std::to_string(need) + " columns, got " + std::to_string(row.size()));
  }
}

double at(const Row& row, size_t i, double fallback = 0.0) {
  return i < row.size() ? row[i].value : fallback;
}

}  // namespace

RawCase parse_matpower_acdc_text(const std::string& text, const std::string& filename) {
  Scanner s{text, filename};
  RawCase rc;
  bool saw_base = false;

  while (true) {
    s.skip_ws_and_comments();
    if (s.eof()) break;
    if (!is_ident_start(s.peek())) s.fail("expected an identifier");
    int kw_line = s.line, kw_col = s.col;
    std::string ident = read_ident(s);

    if (ident == "function") {
      s.skip_ws_and_comments();
      read_ident(s);  // mpc
      s.skip_ws_and_comments();
      if (!s.eof() && s.peek() == '=') {
        s.get();
        s.skip_ws_and_comments();
        rc.name = read_ident(s);
      }
      continue;
    }

    if (ident.rfind("mpc.", 0) != 0)
      throw ParseError(filename, kw_line, kw_col, "unexpected identifier '" + ident + "'");
    std::string field = ident.substr(4);

    s.skip_ws_and_comments();
    if (s.eof() || s.peek() != '=') s.fail("expected '=' after mpc." + field);
    s.get();
    s.skip_ws_and_comments();

    if (field == "version") {
      read_quoted(s);
      continue;
    }
    if (field == "baseMVA") {
      rc.base_mva = read_scalar(s);
      saw_base = true;
      continue;
    }
    if (field == "dcpol") {
      rc.dc_poles = static_cast<int>(read_scalar(s));
      continue;
    }

    if (s.eof() || s.peek() != '[') {
      // unknown scalar field, consume and ignore
      read_scalar(s);
      continue;
    }
    std::vector<Row> m = read_matrix(s);

    if (field == "bus") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "bus", i, r, 13);
        RawAcBus b;
        b.id = static_cast<int>(r[0].value);
        b.type = static_cast<int>(r[1].value);
        b.pd_mw = r[2].value;
        b.qd_mvar = r[3].value;
        b.gs_mw = r[4].value;
        b.bs_mvar = r[5].value;
        b.vm = r[7].value;
        b.va_deg = r[8].value;
        b.base_kv = r[9].value;
        b.vmax = r[11].value;
        b.vmin = r[12].value;
        rc.ac_buses.push_back(b);
      }
    } else if (field == "gen") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "gen", i, r, 10);
        RawGen g;
        g.bus = static_cast<int>(r[0].value);
        g.pg_mw = r[1].value;
        g.qg_mvar = r[2].value;
        g.qmax_mvar = r[3].value;
        g.qmin_mvar = r[4].value;
        g.vg = r[5].value;
        g.mbase = r[6].value;
        g.status = static_cast<int>(r[7].value);
        g.pmax_mw = r[8].value;
        g.pmin_mw = r[9].value;
        rc.gens.push_back(g);
      }
    } else if (field == "gencost") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "gencost", i, r, 4);
        RawGenCost c;
        c.model = static_cast<int>(r[0].value);
        c.startup = r[1].value;
        c.shutdown = r[2].value;
        int n = static_cast<int>(r[3].value);
        check_width(s, "gencost", i, r, 4 + static_cast<size_t>(n));
        for (int k = 0; k < n; ++k) c.coeff.push_back(r[4 + k].value);
        rc.gencosts.push_back(c);
      }
    } else if (field == "branch") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "branch", i, r, 11);
        RawAcBranch b;
        b.from = static_cast<int>(r[0].value);
        b.to = static_cast<int>(r[1].value);
        b.r = r[2].value;
        b.x = r[3].value;
        b.b = r[4].value;
        b.rate_a_mva = r[5].value;
        b.rate_b_mva = r[6].value;
        b.rate_c_mva = r[7].value;
        b.tap = r[8].value;
        b.shift_deg = r[9].value;
        b.status = static_cast<int>(r[10].value);
        b.angmin_deg = at(r, 11, -60.0);
        b.angmax_deg = at(r, 12, 60.0);
        rc.ac_branches.push_back(b);
      }
    } else if (field == "busdc") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "busdc", i, r, 7);
        RawDcBus b;
        b.id = static_cast<int>(r[0].value);
        b.grid = static_cast<int>(r[1].value);
        b.pd_mw = r[2].value;
        b.vdc = r[3].value;
        b.base_kv = r[4].value;
        b.vdcmax = r[5].value;
        b.vdcmin = r[6].value;
        rc.dc_buses.push_back(b);
      }
    } else if (field == "branchdc") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "branchdc", i, r, 9);
        RawDcBranch b;
        b.from = static_cast<int>(r[0].value);
        b.to = static_cast<int>(r[1].value);
        b.r = r[2].value;
        // columns 3 and 4 are inductance and capacitance, steady state ignores them
        b.rate_a_mw = r[5].value;
        b.rate_b_mw = r[6].value;
        b.rate_c_mw = r[7].value;
        b.status = static_cast<int>(r[8].value);
        b.poles = static_cast<int>(at(r, 9, 0.0));
        rc.dc_branches.push_back(b);
      }
    } else if (field == "convdc") {
      for (size_t i = 0; i < m.size(); ++i) {
        const Row& r = m[i];
        check_width(s, "convdc", i, r, 27);
        RawConverter c;
        c.dc_bus = static_cast<int>(r[0].value);
        c.ac_bus = static_cast<int>(r[1].value);
        c.grid = static_cast<int>(r[2].value);
        c.type_dc = static_cast<int>(r[3].value);
        c.type_ac = static_cast<int>(r[4].value);
        c.p_g_mw = r[5].value;
        c.q_g_mvar = r[6].value;
        c.islcc = static_cast<int>(r[7].value);
        c.vtar = r[8].value;
        c.rtf = r[9].value;
        c.xtf = r[10].value;
        c.transformer = static_cast<int>(r[11].value);
        c.tm = r[12].value;
        c.bf = r[13].value;
        c.filter = static_cast<int>(r[14].value);
        c.rc = r[15].value;
        c.xc = r[16].value;
        c.reactor = static_cast<int>(r[17].value);
        c.base_kv_ac = r[18].value;
        c.vmmax = r[19].value;
        c.vmmin = r[20].value;
        c.imax = r[21].value;
        c.status = static_cast<int>(r[22].value);
        c.loss_a_mw = r[23].value;
        c.loss_b = r[24].value;
        c.loss_c_rec = r[25].value;
        c.loss_c_inv = r[26].value;
        c.droop = at(r, 27);
        c.pdcset_mw = at(r, 28);
        c.vdcset = at(r, 29, 1.0);
        c.dvdcset = at(r, 30);
        // absent power bounds are filled from the current rating at validation
        double nan = std::numeric_limits<double>::quiet_NaN();
        c.pacmax_mw = at(r, 31, nan);
        c.pacmin_mw = at(r, 32, nan);
        c.qacmax_mvar = at(r, 33, nan);
        c.qacmin_mvar = at(r, 34, nan);
        rc.converters.push_back(c);
      }
    }
    // unknown tables are ignored
  }

  if (!saw_base) throw ParseError(filename, 1, 1, "missing mpc.baseMVA");
  if (rc.ac_buses.empty()) throw ParseError(filename, 1, 1, "missing or empty mpc.bus");

  int load_id = 0;
  for (const RawAcBus& b : rc.ac_buses) {
    if (b.pd_mw != 0.0 || b.qd_mvar != 0.0) {
      RawLoad l;
      l.id = ++load_id;
      l.side = 'a';
      l.bus = b.id;
      l.pd_mw = b.pd_mw;
      l.qd_mvar = b.qd_mvar;
      rc.loads.push_back(l);
    }
  }
  for (const RawDcBus& b : rc.dc_buses) {
    if (b.pd_mw != 0.0) {
      RawLoad l;
      l.id = ++load_id;
      l.side = 'd';
      l.bus = b.id;
      l.pd_mw = b.pd_mw;
      rc.loads.push_back(l);
    }
  }
  return rc;
}

RawCase parse_matpower_acdc(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError(path + ": cannot open file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_matpower_acdc_text(ss.str(), path);
}

}  // namespace gridtopo
