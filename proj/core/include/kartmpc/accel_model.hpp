#pragma once

#include <memory>

#include "kartmpc/gp.hpp"
#include "kartmpc/plant.hpp"
#include "kartmpc/reduce.hpp"
#include "kartmpc/vehicle.hpp"

namespace kartmpc {

// One scalar acceleration channel consumed by the prediction dynamics.
// Implementations must be immutable so evaluations within one control step
// are bit-identical.
class AccelModel {
 public:
  virtual ~AccelModel() = default;
  virtual double mean(const Vec6& x_gp) const = 0;
  virtual Vec6 gradient(const Vec6& x_gp) const = 0;
};

// GP posterior mean channel (full model, SoD model or NN local model).
class GpAccelModel final : public AccelModel {
 public:
  explicit GpAccelModel(std::shared_ptr<const gp::GpModel> model)
      : model_(std::move(model)) {}
  explicit GpAccelModel(std::shared_ptr<const gp::LocalModel> local)
      : model_(local, &local->model) {}

  double mean(const Vec6& x_gp) const override;
  Vec6 gradient(const Vec6& x_gp) const override;

  const gp::GpModel& model() const { return *model_; }

 private:
  std::shared_ptr<const gp::GpModel> model_;
};

// Bicycle/Pacejka accelerations without actuator lag: the plant equations
// exposed through the prediction-model interface, so the nominal controller
// differs from the plant only by the lag.
class NominalAccelModel final : public AccelModel {
 public:
  enum class Channel { Lateral, Yaw };

  NominalAccelModel(PlantParams params, Channel channel)
      : params_(std::move(params)), channel_(channel) {}

  double mean(const Vec6& x_gp) const override;
  Vec6 gradient(const Vec6& x_gp) const override;

 private:
  PlantParams params_;
  Channel channel_;
};

// The two channels the dynamics need: lateral (dv_y/dt) and yaw (d2theta/dt2).
struct AccelerationModels {
  const AccelModel* lateral = nullptr;
  const AccelModel* yaw = nullptr;
};

}  // namespace kartmpc
