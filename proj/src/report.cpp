#include "pwsync/report.hpp"

#include <fmt/format.h>

#include <cmath>

namespace pwsync::report {

namespace {

std::string fmt_num(double v) {
  if (std::isnan(v)) return "n/a";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.10g}", v);
}

std::string fmt_vec(const Vec& v) {
  std::string out = "[";
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_num(v[i]);
  }
  return out + "]";
}

nlohmann::json vec_json(const Vec& v) {
  auto arr = nlohmann::json::array();
  for (double x : v) arr.push_back(number(x));
  return arr;
}

nlohmann::json cert_json(const certify::QuadCertificate& c) {
  return {{"p", vec_json(c.p)},
          {"w", vec_json(c.w)},
          {"domain_radius", number(c.domain_radius)},
          {"method", certify::to_string(c.method)}};
}

}  // namespace

nlohmann::json number(double v) {
  if (std::isnan(v)) return nullptr;
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

std::string to_text(const certify::BoundReport& r) {
  std::string s;
  auto line = [&s](std::string_view k, const std::string& v) {
    s += fmt::format("{}: {}\n", k, v);
  };
  line("theorem", r.theorem);
  line("nodes", std::to_string(r.n_nodes));
  line("dim", std::to_string(r.dim));
  line("gain", fmt_num(r.gain));
  line("lambda2", fmt_num(r.lambda2));
  line("lambda2_kron", fmt_num(r.lambda2_kron));
  line("coupled_components", std::to_string(r.coupled_count));
  line("M_bar", fmt_num(r.M_bar));
  line("h_bar_0", fmt_num(r.h_bar_0));
  line("w_max", fmt_num(r.w_max));
  line("BQ_radius", fmt_num(r.BQ_radius));
  line("h_max", fmt_num(r.h_max) + (r.h_max_statistical ? " (sampled)" : ""));
  if (!r.W_max_diag.empty()) line("W_max_diag", fmt_vec(r.W_max_diag));
  line("m", fmt_num(r.m_value));
  line("c_tilde", fmt_num(r.c_tilde));
  line("ctilde_objective", fmt_num(r.ctilde_objective));
  line("eps1", fmt_num(r.eps1));
  line("eps2", fmt_num(r.eps2));
  line("eps_bar", fmt_num(r.eps_bar));
  line("eps_source", r.eps_source.empty() ? "n/a" : r.eps_source);
  line("r_max", fmt_num(r.r_max));
  line("delta", fmt_num(r.delta));
  line("nu", fmt_num(r.nu));
  line("e0_norm", fmt_num(r.e0_norm));
  if (r.certificate) {
    line("P", fmt_vec(r.certificate->p));
    line("W", fmt_vec(r.certificate->w));
    line("certificate_method", certify::to_string(r.certificate->method));
  }
  if (r.q_certificate) line("Q", fmt_vec(r.q_certificate->p));
  for (const auto& h : r.hypotheses)
    line("hypothesis." + h.name, std::string(h.passed ? "pass" : "FAIL") +
                                     (h.detail.empty() ? "" : " (" + h.detail + ")"));
  line("certified", r.certified() ? "yes" : "no");
  return s;
}

nlohmann::json to_json(const certify::BoundReport& r) {
  nlohmann::json j;
  j["theorem"] = r.theorem;
  j["n_nodes"] = r.n_nodes;
  j["dim"] = r.dim;
  j["gain"] = number(r.gain);
  j["lambda2"] = number(r.lambda2);
  j["lambda2_kron"] = number(r.lambda2_kron);
  j["coupled_count"] = r.coupled_count;
  j["M_bar"] = number(r.M_bar);
  j["h_bar_0"] = number(r.h_bar_0);
  j["w_max"] = number(r.w_max);
  j["BQ_radius"] = number(r.BQ_radius);
  j["h_max"] = number(r.h_max);
  j["h_max_statistical"] = r.h_max_statistical;
  j["W_max_diag"] = vec_json(r.W_max_diag);
  j["m"] = number(r.m_value);
  j["c_tilde"] = number(r.c_tilde);
  j["ctilde_objective"] = number(r.ctilde_objective);
  j["eps1"] = number(r.eps1);
  j["eps2"] = number(r.eps2);
  j["eps_bar"] = number(r.eps_bar);
  j["eps_source"] = r.eps_source;
  j["r_max"] = number(r.r_max);
  j["delta"] = number(r.delta);
  j["nu"] = number(r.nu);
  j["e0_norm"] = number(r.e0_norm);
  j["certificate"] = r.certificate ? cert_json(*r.certificate) : nlohmann::json(nullptr);
  j["q_certificate"] = r.q_certificate ? cert_json(*r.q_certificate) : nlohmann::json(nullptr);
  auto hyps = nlohmann::json::array();
  for (const auto& h : r.hypotheses)
    hyps.push_back({{"name", h.name}, {"passed", h.passed}, {"detail", h.detail}});
  j["hypotheses"] = hyps;
  j["hypotheses_hold"] = r.hypotheses_hold();
  j["certified"] = r.certified();
  return j;
}

}  // namespace pwsync::report
