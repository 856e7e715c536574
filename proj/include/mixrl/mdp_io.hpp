#pragma once

#include <iosfwd>
#include <string>

#include "mixrl/mdp.hpp"

namespace mixrl {

// Plain-text MDP format, one value stream per line, doubles written with the
// shortest round-tripping representation:
//
//   mixrl mdp v1
//   states <S>
//   actions <A>
//   rmax <double>
//   transitions
//   <s> <a> <p_0> ... <p_{S-1}>     (S*A lines, s-major then a)
//   rewards
//   <s> <r_0> ... <r_{A-1}>         (S lines)
//   end
//
// The policy format mirrors it with a "rows" section of per-state
// action distributions.

void save_mdp(const TabularMdp& mdp, std::ostream& out);
void save_mdp(const TabularMdp& mdp, const std::string& path);
TabularMdp load_mdp(std::istream& in);
TabularMdp load_mdp(const std::string& path);

void save_policy(const PolicyTable& pi, std::ostream& out);
void save_policy(const PolicyTable& pi, const std::string& path);
PolicyTable load_policy(std::istream& in);
PolicyTable load_policy(const std::string& path);

std::string mdp_to_string(const TabularMdp& mdp);

}  // namespace mixrl
