#include "claimforge/pipeline/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <variant>

#include "claimforge/pipeline/corpus.hpp"

namespace claimforge::pipeline {

namespace {

static_assert(std::is_same_v<std::uint64_t, std::size_t>, "seed is stored as a size_t field");

using Field = std::variant<std::size_t PipelineConfig::*, double PipelineConfig::*,
                           bool PipelineConfig::*, std::string PipelineConfig::*>;

struct Entry {
  const char* key;
  Field field;
};

const std::vector<Entry>& entries() {
  using C = PipelineConfig;
  static const std::vector<Entry> table = {
      {"seed", &C::seed},
      {"model_dim", &C::model_dim},
      {"num_heads", &C::num_heads},
      {"head_dim", &C::head_dim},
      {"num_layers", &C::num_layers},
      {"max_seq_len", &C::max_seq_len},
      {"ffn_dim", &C::ffn_dim},
      {"vocab_cap", &C::vocab_cap},
      {"chunk_centering", &C::chunk_centering},
      {"chunk_scale", &C::chunk_scale},
      {"top_k", &C::top_k},
      {"workers", &C::workers},
      {"max_prefix_tokens", &C::max_prefix_tokens},
      {"gen_max_len", &C::gen_max_len},
      {"gen_mode", &C::gen_mode},
      {"gen_temperature", &C::gen_temperature},
      {"lr", &C::lr},
      {"weight_decay", &C::weight_decay},
      {"batch_size", &C::batch_size},
      {"clip_norm", &C::clip_norm},
      {"sim_epochs", &C::sim_epochs},
      {"sim_temperature", &C::sim_temperature},
      {"sim_aux_weight", &C::sim_aux_weight},
      {"sim_train_encoder", &C::sim_train_encoder},
      {"gen_steps", &C::gen_steps},
      {"curriculum", &C::curriculum},
      {"curriculum_gamma", &C::curriculum_gamma},
      {"curriculum_t0", &C::curriculum_t0},
      {"level3_tau_threshold", &C::level3_tau_threshold},
      {"verbatim_mode", &C::verbatim_mode},
      {"domain_loss_weight", &C::domain_loss_weight},
      {"gen_eval_every", &C::gen_eval_every},
      {"eval_steps", &C::eval_steps},
      {"eval_train_encoder", &C::eval_train_encoder},
      {"base_margin", &C::base_margin},
      {"margin_strength", &C::margin_strength},
      {"rouge_beta", &C::rouge_beta},
      {"bleu_max_n", &C::bleu_max_n},
  };
  return table;
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_integer(const std::string& v, T& out) {
  auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  return ec == std::errc() && p == v.data() + v.size();
}

bool parse_value(const std::string& v, PipelineConfig& c, const Field& field) {
  return std::visit(
      [&](auto member) -> bool {
        using T = std::remove_cvref_t<decltype(c.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          if (v == "true" || v == "1") return (c.*member = true), true;
          if (v == "false" || v == "0") return (c.*member = false), true;
          return false;
        } else if constexpr (std::is_same_v<T, double>) {
          try {
            std::size_t used = 0;
            double d = std::stod(v, &used);
            if (used != v.size()) return false;
            c.*member = d;
            return true;
          } catch (const std::exception&) {
            return false;
          }
        } else if constexpr (std::is_same_v<T, std::string>) {
          c.*member = v;
          return true;
        } else {
          return parse_integer(v, c.*member);
        }
      },
      field);
}

std::string format_value(const PipelineConfig& c, const Field& field) {
  return std::visit(
      [&](auto member) -> std::string {
        using T = std::remove_cvref_t<decltype(c.*member)>;
        if constexpr (std::is_same_v<T, bool>) {
          return c.*member ? "true" : "false";
        } else if constexpr (std::is_same_v<T, double>) {
          std::ostringstream os;
          os.precision(17);
          os << c.*member;
          return os.str();
        } else if constexpr (std::is_same_v<T, std::string>) {
          return c.*member;
        } else {
          return std::to_string(c.*member);
        }
      },
      field);
}

}  // namespace

textcore::EncoderConfig PipelineConfig::encoder_config() const {
  textcore::EncoderConfig e;
  e.model_dim = model_dim;
  e.num_heads = num_heads;
  e.head_dim = head_dim;
  e.num_layers = num_layers;
  e.max_seq_len = max_seq_len;
  e.ffn_dim = ffn_dim;
  return e;
}

training::CurriculumSchedule PipelineConfig::schedule() const {
  training::CurriculumSchedule s;
  s.gamma = curriculum_gamma;
  s.t0 = curriculum_t0;
  s.level3_tau_threshold = level3_tau_threshold;
  s.verbatim_mode = verbatim_mode;
  return s;
}

similarity::SimilarityTrainConfig PipelineConfig::similarity_training() const {
  similarity::SimilarityTrainConfig s;
  s.epochs = sim_epochs;
  s.batch_size = batch_size;
  s.lr = lr;
  s.weight_decay = weight_decay;
  s.temperature = sim_temperature;
  s.aux_weight = sim_aux_weight;
  s.clip_norm = clip_norm;
  s.train_encoder = sim_train_encoder;
  s.seed = seed;
  return s;
}

generator::GeneratorTrainConfig PipelineConfig::generator_training() const {
  generator::GeneratorTrainConfig g;
  g.steps = gen_steps;
  g.batch_size = batch_size;
  g.lr = lr;
  g.weight_decay = weight_decay;
  g.clip_norm = clip_norm;
  g.curriculum = curriculum;
  g.schedule = schedule();
  g.domain_loss_weight = domain_loss_weight;
  g.seed = seed;
  g.eval_every = gen_eval_every;
  return g;
}

evaluator::EvaluatorTrainConfig PipelineConfig::evaluator_training() const {
  evaluator::EvaluatorTrainConfig e;
  e.steps = eval_steps;
  e.batch_size = batch_size;
  e.lr = lr;
  e.weight_decay = weight_decay;
  e.clip_norm = clip_norm;
  e.train_encoder = eval_train_encoder;
  e.seed = seed;
  return e;
}

generator::GenerateOptions PipelineConfig::generate_options() const {
  generator::GenerateOptions o;
  o.max_len = gen_max_len;
  o.mode = gen_mode == "sample" ? generator::DecodeMode::sample : generator::DecodeMode::greedy;
  o.temperature = gen_temperature;
  o.seed = seed;
  return o;
}

void PipelineConfig::validate() const {
  try {
    encoder_config().validate();
    schedule().validate();
  } catch (const std::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  if (gen_mode != "greedy" && gen_mode != "sample") throw InputError("config: gen_mode must be greedy or sample");
  if (top_k == 0) throw InputError("config: top_k must be positive");
  if (batch_size == 0) throw InputError("config: batch_size must be positive");
  if (gen_max_len == 0) throw InputError("config: gen_max_len must be positive");
  if (!(chunk_scale > 0)) throw InputError("config: chunk_scale must be positive");
  if (!(gen_temperature > 0)) throw InputError("config: gen_temperature must be positive");
  if (!(sim_temperature > 0)) throw InputError("config: sim_temperature must be positive");
  if (lr < 0 || weight_decay < 0) throw InputError("config: lr and weight_decay must be non-negative");
  if (margin_strength < 0) throw InputError("config: margin_strength must be non-negative");
  if (!(rouge_beta > 0)) throw InputError("config: rouge_beta must be positive");
  if (bleu_max_n == 0) throw InputError("config: bleu_max_n must be positive");
}

PipelineConfig parse_config(const std::string& text) {
  PipelineConfig c;
  std::istringstream in(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    auto eq = t.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(n) + ": expected key = value");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    const Entry* entry = nullptr;
    for (const auto& e : entries()) {
      if (key == e.key) entry = &e;
    }
    if (!entry) throw InputError("config line " + std::to_string(n) + ": unknown key '" + key + "'");
    if (!parse_value(value, c, entry->field)) {
      throw InputError("config line " + std::to_string(n) + ": bad value '" + value + "' for " + key);
    }
  }
  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string to_text(const PipelineConfig& c) {
  std::string out;
  for (const auto& e : entries()) out += std::string(e.key) + " = " + format_value(c, e.field) + "\n";
  return out;
}

}  // namespace claimforge::pipeline
