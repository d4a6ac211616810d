#pragma once

#include "milo/relax/interval.hpp"

#include <stdexcept>

namespace milo::relax {

enum class VarClass { Angle, TrigProduct, EulerRate, AngularVelocity, ToePosition, Force };

struct ClassSpec {
  Interval range;
  int regions = 1;
};

// Per-variable-class segmentation. Defaults are the paper-scale values;
// planar_desk() is the reduced CI-scale preset used by the desk instances.
struct SegmentationSpec {
  ClassSpec angle{{-1.5707963267948966, 1.5707963267948966}, 4};
  ClassSpec trig_product{{-1.0, 1.0}, 4};
  ClassSpec euler_rate{{-10.0, 10.0}, 16};
  ClassSpec angular_velocity{{-10.0, 10.0}, 16};
  ClassSpec toe_position{{-0.08, 0.08}, 4};
  ClassSpec force{{-15.0, 15.0}, 16};

  const ClassSpec& at(VarClass c) const {
    switch (c) {
      case VarClass::Angle: return angle;
      case VarClass::TrigProduct: return trig_product;
      case VarClass::EulerRate: return euler_rate;
      case VarClass::AngularVelocity: return angular_velocity;
      case VarClass::ToePosition: return toe_position;
      case VarClass::Force: return force;
    }
    throw std::logic_error("unknown variable class");
  }

  void validate() const {
    for (auto c : {VarClass::Angle, VarClass::TrigProduct, VarClass::EulerRate,
                   VarClass::AngularVelocity, VarClass::ToePosition, VarClass::Force}) {
      at(c).range.validate("segmentation range");
      if (at(c).regions < 1) throw std::invalid_argument("region count must be >= 1");
    }
  }

  // Doubles (or scales) every region count; used by refinement tests.
  SegmentationSpec refined(int factor = 2) const {
    SegmentationSpec s = *this;
    s.angle.regions *= factor;
    s.trig_product.regions *= factor;
    s.euler_rate.regions *= factor;
    s.angular_velocity.regions *= factor;
    s.toe_position.regions *= factor;
    s.force.regions *= factor;
    return s;
  }

  static SegmentationSpec paper_default() { return {}; }

  static SegmentationSpec planar_desk() {
    SegmentationSpec s;
    s.angle.regions = 2;
    s.trig_product.regions = 2;
    s.euler_rate = {{-6.0, 6.0}, 4};
    s.angular_velocity = {{-6.0, 6.0}, 4};
    s.toe_position.regions = 2;
    s.force = {{-15.0, 15.0}, 4};
    return s;
  }
};

}  // namespace milo::relax
