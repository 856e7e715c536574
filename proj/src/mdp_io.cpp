#include "mixrl/mdp_io.hpp"

#include <fstream>
#include <sstream>

#include "mixrl/csv.hpp"
#include "mixrl/errors.hpp"

namespace mixrl {

namespace {

void expect_word(std::istream& in, const std::string& want,
                 const std::string& ctx) {
  std::string got;
  if (!(in >> got) || got != want)
    throw Error("mdp_io: expected '" + want + "' " + ctx + ", got '" + got +
                "'");
}

int read_count(std::istream& in, const std::string& key) {
  expect_word(in, key, "header");
  long v = 0;
  if (!(in >> v) || v <= 0)
    throw Error("mdp_io: bad value for '" + key + "'");
  return static_cast<int>(v);
}

double read_double(std::istream& in, const std::string& ctx) {
  double v = 0.0;
  if (!(in >> v)) throw Error("mdp_io: malformed number " + ctx);
  return v;
}

int read_index(std::istream& in, int want, const std::string& ctx) {
  long v = -1;
  if (!(in >> v) || v != want)
    throw Error("mdp_io: expected index " + std::to_string(want) + " " + ctx);
  return static_cast<int>(v);
}

}  // namespace

void save_mdp(const TabularMdp& mdp, std::ostream& out) {
  mdp.validate();
  out << "mixrl mdp v1\n";
  out << "states " << mdp.n_states << "\n";
  out << "actions " << mdp.n_actions << "\n";
  out << "rmax " << fmt_double(mdp.r_max) << "\n";
  out << "transitions\n";
  for (int s = 0; s < mdp.n_states; ++s)
    for (int a = 0; a < mdp.n_actions; ++a) {
      out << s << " " << a;
      for (double v : mdp.row(s, a)) out << " " << fmt_double(v);
      out << "\n";
    }
  out << "rewards\n";
  for (int s = 0; s < mdp.n_states; ++s) {
    out << s;
    for (int a = 0; a < mdp.n_actions; ++a)
      out << " " << fmt_double(mdp.rew(s, a));
    out << "\n";
  }
  out << "end\n";
}

void save_mdp(const TabularMdp& mdp, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("mdp_io: cannot open for writing: " + path);
  save_mdp(mdp, f);
}

TabularMdp load_mdp(std::istream& in) {
  expect_word(in, "mixrl", "magic");
  expect_word(in, "mdp", "magic");
  expect_word(in, "v1", "version");
  int ns = read_count(in, "states");
  int na = read_count(in, "actions");
  expect_word(in, "rmax", "header");
  double rmax = read_double(in, "for rmax");
  TabularMdp m = TabularMdp::zeros(ns, na, rmax);
  expect_word(in, "transitions", "section");
  for (int s = 0; s < ns; ++s)
    for (int a = 0; a < na; ++a) {
      read_index(in, s, "in transitions");
      read_index(in, a, "in transitions");
      auto row = m.row(s, a);
      for (int j = 0; j < ns; ++j)
        row[j] = read_double(in, "in transition row");
    }
  expect_word(in, "rewards", "section");
  for (int s = 0; s < ns; ++s) {
    read_index(in, s, "in rewards");
    for (int a = 0; a < na; ++a)
      m.rew(s, a) = read_double(in, "in reward row");
  }
  expect_word(in, "end", "footer");
  m.validate();
  return m;
}

TabularMdp load_mdp(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("mdp_io: cannot open for reading: " + path);
  return load_mdp(f);
}

void save_policy(const PolicyTable& pi, std::ostream& out) {
  pi.validate();
  out << "mixrl policy v1\n";
  out << "states " << pi.n_states << "\n";
  out << "actions " << pi.n_actions << "\n";
  out << "rows\n";
  for (int s = 0; s < pi.n_states; ++s) {
    out << s;
    for (int a = 0; a < pi.n_actions; ++a)
      out << " " << fmt_double(pi.at(s, a));
    out << "\n";
  }
  out << "end\n";
}

void save_policy(const PolicyTable& pi, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw Error("mdp_io: cannot open for writing: " + path);
  save_policy(pi, f);
}

PolicyTable load_policy(std::istream& in) {
  expect_word(in, "mixrl", "magic");
  expect_word(in, "policy", "magic");
  expect_word(in, "v1", "version");
  int ns = read_count(in, "states");
  int na = read_count(in, "actions");
  PolicyTable pi = PolicyTable::uniform(ns, na);
  expect_word(in, "rows", "section");
  for (int s = 0; s < ns; ++s) {
    read_index(in, s, "in rows");
    for (int a = 0; a < na; ++a)
      pi.at(s, a) = read_double(in, "in policy row");
  }
  expect_word(in, "end", "footer");
  pi.validate();
  return pi;
}

PolicyTable load_policy(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("mdp_io: cannot open for reading: " + path);
  return load_policy(f);
}

std::string mdp_to_string(const TabularMdp& mdp) {
  std::ostringstream ss;
  save_mdp(mdp, ss);
  return ss.str();
}

}  // namespace mixrl
