#include "rune/runicos.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>

namespace rune::runicos {
namespace {

std::uint32_t requested_samples(const bundle::CapabilityRequest& request) {
  auto samples = request.param("samples");
  if (!samples || *samples == 0) {
    fail(Errc::InvalidArgument, std::string(to_string(request.kind)) + " request has no --samples");
  }
  return *samples;
}

const bundle::CapabilityRequest* find_request(const bundle::Manifest& m, CapabilityKind kind) {
  for (const auto& c : m.capabilities) {
    if (c.kind == kind) return &c;
  }
  return nullptr;
}

std::uint64_t f32_bytes(const Shape& s) { return 4ull * element_count(s); }

// Static working-set bound: for every instruction, the larger of its input
// and output tensors (and hidden activations for INFER), summed.
std::uint64_t working_set(const bundle::RuneBundle& b, const std::vector<pipeline::DenseModel>& models) {
  std::uint64_t total = 0;
  Shape current;
  for (const auto& ins : b.bytecode) {
    switch (ins.op) {
      case bundle::Opcode::ReadCap: {
        const auto* req = find_request(b.manifest, static_cast<CapabilityKind>(ins.operand));
        if (!req) break;  // not requested; call() will refuse it
        current = Shape{req->param("samples").value_or(1), 1};
        total += f32_bytes(current);
        break;
      }
      case bundle::Opcode::Proc:
        total += f32_bytes(current);
        break;
      case bundle::Opcode::Infer: {
        const auto& info = b.manifest.models[ins.operand];
        std::uint64_t widest = 4ull * models[ins.operand].max_width();
        total += std::max({f32_bytes(current), f32_bytes(info.output_shape), widest});
        current = info.output_shape;
        break;
      }
      case bundle::Opcode::WriteOut:
        break;
    }
  }
  return total;
}

}  // namespace

// ---------------------------------------------------------------------------
// Providers

Tensor CapabilityProvider::read(const bundle::CapabilityRequest& request) {
  if (request.kind != kind_) fail(Errc::InvalidArgument, "provider kind does not match request");
  std::uint32_t samples = requested_samples(request);
  thread_local std::vector<float> values;
  values.resize(samples);
  produce(request, values);
  reads_.fetch_add(1);
  return Tensor::from_floats(Shape{samples, 1}, values);
}

void ConstantProvider::produce(const bundle::CapabilityRequest&, std::span<float> out) {
  std::fill(out.begin(), out.end(), value_);
}

void SeededProvider::produce(const bundle::CapabilityRequest&, std::span<float> out) {
  for (auto& v : out) {
    auto top24 = static_cast<std::uint32_t>(rng_() >> 40);
    v = static_cast<float>(top24) * (2.0f / 16777216.0f) - 1.0f;
  }
}

FileProvider::FileProvider(CapabilityKind kind, const std::filesystem::path& path) : CapabilityProvider(kind) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::IoError, "cannot open sample file " + path.string());
  Bytes raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (raw.empty() || raw.size() % 4 != 0) {
    fail(Errc::IoError, "sample file " + path.string() + " is not a non-empty f32 stream");
  }
  ByteReader r(raw);
  samples_.resize(raw.size() / 4);
  for (auto& s : samples_) s = r.f32();
}

void FileProvider::produce(const bundle::CapabilityRequest&, std::span<float> out) {
  for (auto& v : out) {
    v = samples_[pos_];
    pos_ = (pos_ + 1) % samples_.size();
  }
}

// ---------------------------------------------------------------------------
// Sinks

std::string render_serial_line(const Tensor& t) {
  std::string line;
  char buf[32];
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i) line += ' ';
    switch (t.dtype()) {
      case DType::F32: {
        auto [end, ec] = std::to_chars(buf, buf + sizeof buf, t.at_f32(i));
        line.append(buf, end);
        break;
      }
      case DType::U8:
        line += std::to_string(t.payload()[i]);
        break;
      case DType::I32: {
        std::int32_t v;
        std::memcpy(&v, t.payload().data() + 4 * i, 4);
        line += std::to_string(v);
        break;
      }
    }
  }
  return line;
}

void SerialSink::write(const Tensor& t) { out_ << render_serial_line(t) << '\n'; }

// ---------------------------------------------------------------------------
// Device and instance

DeviceProfile& DeviceProfile::add(std::shared_ptr<CapabilityProvider> provider) {
  CapabilityKind kind = provider->kind();
  if (!providers.emplace(kind, std::move(provider)).second) {
    fail(Errc::InvalidArgument, "device already has a " + std::string(to_string(kind)) + " provider");
  }
  return *this;
}

std::string_view to_string(InstanceState s) noexcept {
  switch (s) {
    case InstanceState::Loaded: return "LOADED";
    case InstanceState::Manifested: return "MANIFESTED";
    case InstanceState::Ready: return "READY";
    case InstanceState::Faulted: return "FAULTED";
  }
  return "?";
}

SagaMetrics RuneInstance::health() const {
  std::lock_guard lock(saga_->mu);
  return saga_->metrics;
}

void RuneInstance::fault(const std::string& message) {
  state_ = InstanceState::Faulted;
  std::lock_guard lock(saga_->mu);
  saga_->metrics.state = state_;
  saga_->metrics.last_error = message;
}

RuneInstance load(ByteView bundle_bytes, DeviceProfile device) {
  RuneInstance inst;
  inst.bundle_ = bundle::decode_bundle(bundle_bytes);
  inst.bundle_size_ = bundle_bytes.size();
  inst.models_.reserve(inst.bundle_.model_blobs.size());
  for (std::size_t i = 0; i < inst.bundle_.model_blobs.size(); ++i) {
    const auto& blob = inst.bundle_.model_blobs[i];
    const auto& info = inst.bundle_.manifest.models[i];
    pipeline::DenseModel model = pipeline::read_rmodel(blob.bytes);
    if (model.input_size() != element_count(info.input_shape) ||
        model.output_size() != element_count(info.output_shape)) {
      fail(Errc::ModelFormatError, "model '" + info.name + "' does not match its declared shapes");
    }
    inst.models_.push_back(std::move(model));
  }
  inst.device_ = std::move(device);
  inst.saga_->metrics.boot_time = std::chrono::system_clock::now();
  inst.saga_->metrics.state = InstanceState::Loaded;
  return inst;
}

bundle::Manifest manifest(RuneInstance& inst) {
  if (inst.state_ == InstanceState::Faulted) fail(Errc::Faulted, "instance is faulted");
  if (inst.state_ != InstanceState::Loaded) return inst.bundle_.manifest;

  const auto& m = inst.bundle_.manifest;
  for (const auto& req : m.capabilities) {
    if (!inst.device_.has(req.kind)) {
      std::string msg = "CapabilityDenied(" + std::string(to_string(req.kind)) + "): device '" +
                        inst.device_.name + "' has no such capability";
      inst.fault(msg);
      fail(Errc::CapabilityDenied, msg);
    }
  }
  inst.memory_required_ = inst.bundle_size_ + working_set(inst.bundle_, inst.models_);
  if (inst.memory_required_ > inst.device_.memory_budget) {
    std::string msg = "InsufficientMemory: rune needs " + std::to_string(inst.memory_required_) +
                      " bytes, device budget is " + std::to_string(inst.device_.memory_budget);
    inst.fault(msg);
    fail(Errc::InsufficientMemory, msg);
  }
  inst.state_ = InstanceState::Manifested;
  for (const auto& req : m.capabilities) inst.granted_.insert(req.kind);
  inst.state_ = InstanceState::Ready;
  {
    std::lock_guard lock(inst.saga_->mu);
    inst.saga_->metrics.state = inst.state_;
  }
  return m;
}

Tensor call(RuneInstance& inst, Codec codec) {
  switch (inst.state_) {
    case InstanceState::Ready: break;
    case InstanceState::Faulted: fail(Errc::Faulted, "instance is faulted; call refused");
    default: fail(Errc::NotManifested, "call before manifest");
  }

  {
    std::lock_guard lock(inst.saga_->mu);
    ++inst.saga_->metrics.invocations;
  }
  auto start = std::chrono::steady_clock::now();
  auto account = [&] {
    auto ns = std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now() - start).count();
    std::lock_guard lock(inst.saga_->mu);
    inst.saga_->metrics.total_exec_nanos += static_cast<std::uint64_t>(std::max<std::int64_t>(ns, 1));
  };

  const auto& m = inst.bundle_.manifest;
  Bytes& boundary = inst.boundary_;
  bool have_value = false;
  std::optional<Tensor> result;
  try {
    for (const auto& ins : inst.bundle_.bytecode) {
      ++inst.executed_;
      switch (ins.op) {
        case bundle::Opcode::ReadCap: {
          auto kind = static_cast<CapabilityKind>(ins.operand);
          const auto* req = find_request(m, kind);
          if (!req || !inst.granted_.contains(kind)) {
            fail(Errc::PermissionViolation,
                 "PermissionViolation(" + std::string(to_string(kind)) + "): capability not granted");
          }
          Tensor t = inst.device_.providers.at(kind)->read(*req);
          encode_tensor(t, codec, boundary);
          have_value = true;
          break;
        }
        case bundle::Opcode::Proc: {
          if (!have_value) fail(Errc::InvalidPipeline, "PROC with no input");
          Tensor in = decode_tensor(boundary, codec);
          encode_tensor(pipeline::run_block(static_cast<BlockId>(ins.operand), in), codec, boundary);
          break;
        }
        case bundle::Opcode::Infer: {
          if (!have_value) fail(Errc::InvalidPipeline, "INFER with no input");
          Tensor in = decode_tensor(boundary, codec);
          Tensor out = pipeline::infer(inst.models_[ins.operand], in, m.models[ins.operand].output_shape);
          encode_tensor(out, codec, boundary);
          break;
        }
        case bundle::Opcode::WriteOut: {
          if (!have_value) fail(Errc::InvalidPipeline, "WRITE_OUT with no input");
          Tensor out = decode_tensor(boundary, codec);
          if (inst.device_.serial) inst.device_.serial->write(out);
          result = std::move(out);
          break;
        }
      }
    }
    if (!result) fail(Errc::InvalidPipeline, "bytecode never reached WRITE_OUT");
  } catch (const Error& e) {
    account();
    inst.fault(e.what());
    throw;
  }
  account();
  return std::move(*result);
}

SagaMetrics health(const RuneInstance& instance) { return instance.health(); }

Tensor run_native(const runefile::PipelineGraph& graph, std::span<const pipeline::DenseModel> models,
                  const ProviderMap& providers, OutputSink* sink) {
  if (graph.stages.empty()) fail(Errc::EmptyPipeline, "pipeline has no stages");
  Tensor value;
  for (const auto& stage : graph.stages) {
    switch (stage.kind) {
      case runefile::StageKind::Capability: {
        auto it = providers.find(stage.capability);
        if (it == providers.end()) {
          fail(Errc::CapabilityDenied, "CapabilityDenied(" + std::string(to_string(stage.capability)) + ")");
        }
        thread_local bundle::CapabilityRequest req;
        req.kind = stage.capability;
        req.params.assign(stage.capability_params.begin(), stage.capability_params.end());
        value = it->second->read(req);
        break;
      }
      case runefile::StageKind::ProcBlock:
        value = pipeline::run_block(stage.block, value);
        break;
      case runefile::StageKind::Model:
        if (stage.model_index >= models.size()) fail(Errc::DanglingReference, "missing model for stage " + stage.id);
        value = pipeline::infer(models[stage.model_index], value, stage.output_shape);
        break;
    }
  }
  if (sink) sink->write(value);
  return value;
}

}  // namespace rune::runicos
