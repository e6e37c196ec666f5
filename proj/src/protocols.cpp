#include "ssagait/eval/protocols.hpp"

#include <algorithm>

namespace ssagait::eval {

const char* protocol_name(Protocol p) {
  switch (p) {
    case Protocol::kLinear: return "linear";
    case Protocol::kFinetune: return "finetune";
    case Protocol::kFinetuneShort: return "finetune-short";
    case Protocol::kSemi: return "semi";
  }
  return "unknown";
}

Protocol parse_protocol(const std::string& name) {
  for (Protocol p : {Protocol::kLinear, Protocol::kFinetune, Protocol::kFinetuneShort, Protocol::kSemi})
    if (name == protocol_name(p)) return p;
  throw std::invalid_argument("unknown protocol '" + name + "'");
}

ProtocolConfig ProtocolConfig::defaults(Protocol p) {
  ProtocolConfig c;
  c.protocol = p;
  switch (p) {
    case Protocol::kLinear:
      c.epochs = 200;
      c.lr = {1e-3, {100}, 0.1};
      break;
    case Protocol::kFinetune:
      c.epochs = 100;
      c.lr = {1e-4, {50}, 0.1};
      break;
    case Protocol::kFinetuneShort:
    case Protocol::kSemi:
      c.epochs = 20;
      c.lr = {1e-3, {10}, 0.1};
      break;
  }
  return c;
}

void ProtocolConfig::validate() const {
  if (epochs < 0) throw std::invalid_argument("epochs must be nonnegative");
  if (!(lr.base > 0.0) || !(lr.gamma > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (batch_size < 1) throw std::invalid_argument("batch size must be positive");
  if (!(sgd_momentum >= 0.0 && sgd_momentum < 1.0)) throw std::invalid_argument("sgd momentum must lie in [0,1)");
  if (!(weight_decay >= 0.0)) throw std::invalid_argument("weight decay must be nonnegative");
  if (protocol == Protocol::kSemi) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw std::invalid_argument("label fraction must lie in (0,1]");
    const auto& allowed = standard_fractions();
    const bool standard = std::any_of(allowed.begin(), allowed.end(),
                                      [&](double f) { return std::abs(f - fraction) < 1e-12; });
    if (!standard && !allow_any_fraction)
      throw std::invalid_argument("label fraction " + std::to_string(fraction) +
                                  " is not one of 0.05, 0.1, 0.2, 0.5, 1.0 (pass the override flag to allow it)");
  }
}

std::vector<int> class_labels(const GaitDataset& ds) {
  std::vector<int> out;
  out.reserve(ds.size());
  for (const auto& s : ds.sequences) {
    if (!s.label) throw std::invalid_argument("dataset has unlabeled samples");
    out.push_back(static_cast<int>(*s.label));
  }
  return out;
}

}  // namespace ssagait::eval
