//! UPER encoding of the profiled message types.
//!
//! Layout: the 6-octet [`ItsPduHeader`] followed by the body in field
//! declaration order, final octet zero-padded. Every message body and every
//! container begins with an extension bit (always 0). SEQUENCE OF counts are
//! size-constrained whole numbers.

use crate::bitcodec::{BitBuffer, CodecError, CodecResult};
use crate::its_types::ranges::{self, Bounds};
use crate::its_types::*;

const HEADER_OCTETS: usize = 6;

/// Validates and encodes one message.
pub fn encode_message(msg: &ItsMessage) -> CodecResult<Vec<u8>> {
    let violations = validate(msg);
    if !violations.is_empty() {
        return Err(CodecError::InvalidMessage(violations));
    }
    let mut w = Writer(BitBuffer::with_capacity_bytes(64));
    w.header(msg.header())?;
    match msg {
        ItsMessage::Cam(m) => w.cam(m)?,
        ItsMessage::Denm(m) => w.denm(m)?,
        ItsMessage::Spatem(m) => w.spatem(m)?,
        ItsMessage::Mapem(m) => w.mapem(m)?,
    }
    Ok(w.0.into_bytes())
}

/// Decodes one payload, dispatching on the header's message id.
pub fn decode_message(payload: &[u8]) -> CodecResult<ItsMessage> {
    let mut r = Reader(BitBuffer::from_bytes(payload));
    let header = r.header()?;
    let msg = match MessageType::from_message_id(header.message_id) {
        Some(MessageType::Cam) => ItsMessage::Cam(r.cam(header)?),
        Some(MessageType::Denm) => ItsMessage::Denm(r.denm(header)?),
        Some(MessageType::Spatem) => ItsMessage::Spatem(r.spatem(header)?),
        Some(MessageType::Mapem) => ItsMessage::Mapem(r.mapem(header)?),
        None => return Err(CodecError::UnknownMessageId(header.message_id)),
    };
    r.0.expect_zero_padding()?;
    Ok(msg)
}

/// Reads the header without touching the body.
pub fn peek_header(payload: &[u8]) -> CodecResult<ItsPduHeader> {
    if payload.len() < HEADER_OCTETS {
        return Err(CodecError::Truncated {
            needed: HEADER_OCTETS * 8,
            available: payload.len() * 8,
        });
    }
    Reader(BitBuffer::from_bytes(&payload[..HEADER_OCTETS])).header()
}

struct Writer(BitBuffer);

impl Writer {
    fn int(&mut self, v: impl Into<i64>, b: Bounds) -> CodecResult<()> {
        self.0.write_constrained_int(v.into(), b.lo, b.hi)
    }

    fn count(&mut self, n: usize, b: Bounds) -> CodecResult<()> {
        self.0.write_constrained_int(n as i64, b.lo, b.hi)
    }

    fn header(&mut self, h: &ItsPduHeader) -> CodecResult<()> {
        self.int(h.protocol_version, ranges::PROTOCOL_VERSION)?;
        self.int(h.message_id, ranges::MESSAGE_ID)?;
        self.int(h.station_id, ranges::STATION_ID)
    }

    fn position(&mut self, p: &ReferencePosition) -> CodecResult<()> {
        self.int(p.latitude, ranges::LATITUDE)?;
        self.int(p.longitude, ranges::LONGITUDE)?;
        self.int(p.altitude_value, ranges::ALTITUDE)?;
        self.int(p.semi_major_confidence, ranges::SEMI_AXIS_CONFIDENCE)?;
        self.int(p.semi_minor_confidence, ranges::SEMI_AXIS_CONFIDENCE)?;
        self.int(p.semi_major_orientation, ranges::SEMI_MAJOR_ORIENTATION)
    }

    fn cam(&mut self, m: &Cam) -> CodecResult<()> {
        self.int(m.generation_delta_time, ranges::GENERATION_DELTA_TIME)?;
        self.0.write_extension_bit();
        self.0
            .write_optional_flags(&[m.low_frequency.is_some(), m.special_vehicle]);

        self.0.write_extension_bit();
        self.int(m.basic.station_type, ranges::STATION_TYPE)?;
        self.position(&m.basic.reference_position)?;

        let hf = &m.high_frequency;
        self.0.write_extension_bit();
        self.0.write_optional_flags(&[hf.vertical_acceleration.is_some()]);
        self.int(hf.heading, ranges::HEADING)?;
        self.int(hf.speed, ranges::SPEED)?;
        self.0.write_enumerated(
            hf.drive_direction as usize,
            DriveDirection::ALL.len(),
        )?;
        self.int(hf.vehicle_length, ranges::VEHICLE_LENGTH)?;
        self.int(hf.vehicle_width, ranges::VEHICLE_WIDTH)?;
        self.int(hf.longitudinal_acceleration, ranges::ACCELERATION)?;
        self.int(hf.curvature, ranges::CURVATURE)?;
        self.int(hf.yaw_rate, ranges::YAW_RATE)?;
        if let Some(v) = hf.vertical_acceleration {
            self.int(v, ranges::ACCELERATION)?;
        }

        if let Some(lf) = &m.low_frequency {
            self.0.write_extension_bit();
            self.int(lf.vehicle_role, ranges::VEHICLE_ROLE)?;
            self.0.write_bits(lf.exterior_lights as u64, 8);
            self.count(lf.path_history.len(), ranges::PATH_HISTORY_LEN)?;
            for p in &lf.path_history {
                self.int(p.delta_latitude, ranges::DELTA_LATITUDE)?;
                self.int(p.delta_longitude, ranges::DELTA_LONGITUDE)?;
                self.int(p.delta_altitude, ranges::DELTA_ALTITUDE)?;
            }
        }
        Ok(())
    }

    fn denm(&mut self, m: &Denm) -> CodecResult<()> {
        self.0.write_extension_bit();
        self.0.write_optional_flags(&[m.situation.is_some()]);

        let mg = &m.management;
        self.0.write_extension_bit();
        self.int(mg.action_id.originating_station_id, ranges::STATION_ID)?;
        self.int(mg.action_id.sequence_number, ranges::SEQUENCE_NUMBER)?;
        self.int(mg.detection_time as i64, ranges::TIMESTAMP_ITS)?;
        self.int(mg.reference_time as i64, ranges::TIMESTAMP_ITS)?;
        self.position(&mg.event_position)?;
        self.int(mg.validity_duration, ranges::VALIDITY_DURATION)?;
        self.int(mg.station_type, ranges::STATION_TYPE)?;

        if let Some(s) = &m.situation {
            self.0.write_extension_bit();
            self.int(s.information_quality, ranges::INFORMATION_QUALITY)?;
            self.int(s.event_type.cause_code, ranges::CAUSE_CODE)?;
            self.int(s.event_type.sub_cause_code, ranges::SUB_CAUSE_CODE)?;
        }
        Ok(())
    }

    fn spatem(&mut self, m: &Spatem) -> CodecResult<()> {
        self.0.write_extension_bit();
        self.count(m.intersections.len(), ranges::INTERSECTIONS_LEN)?;
        for x in &m.intersections {
            self.0.write_extension_bit();
            self.int(x.intersection_id, ranges::INTERSECTION_ID)?;
            self.int(x.revision, ranges::REVISION)?;
            self.count(x.movements.len(), ranges::MOVEMENTS_LEN)?;
            for mv in &x.movements {
                self.0.write_optional_flags(&[mv.min_end_time.is_some()]);
                self.int(mv.signal_group, ranges::SIGNAL_GROUP)?;
                self.0
                    .write_enumerated(mv.event_state as usize, MovementPhaseState::ALL.len())?;
                if let Some(t) = mv.min_end_time {
                    self.int(t, ranges::MIN_END_TIME)?;
                }
            }
        }
        Ok(())
    }

    fn mapem(&mut self, m: &Mapem) -> CodecResult<()> {
        self.0.write_extension_bit();
        self.count(m.intersections.len(), ranges::INTERSECTIONS_LEN)?;
        for x in &m.intersections {
            self.0.write_extension_bit();
            self.int(x.intersection_id, ranges::INTERSECTION_ID)?;
            self.position(&x.ref_point)?;
            self.count(x.lanes.len(), ranges::LANES_LEN)?;
            for lane in &x.lanes {
                self.int(lane.lane_id, ranges::LANE_ID)?;
                self.0.push_bit(lane.ingress);
                self.count(lane.node_offsets.len(), ranges::NODE_OFFSETS_LEN)?;
                for n in &lane.node_offsets {
                    self.int(n.dx, ranges::NODE_OFFSET)?;
                    self.int(n.dy, ranges::NODE_OFFSET)?;
                }
                self.count(lane.connects_to.len(), ranges::CONNECTIONS_LEN)?;
                for c in &lane.connects_to {
                    self.0.write_optional_flags(&[c.signal_group.is_some()]);
                    self.int(c.lane_id, ranges::LANE_ID)?;
                    if let Some(sg) = c.signal_group {
                        self.int(sg, ranges::SIGNAL_GROUP)?;
                    }
                }
            }
        }
        Ok(())
    }
}

struct Reader(BitBuffer);

impl Reader {
    fn int<T: TryFrom<i64>>(&mut self, b: Bounds) -> CodecResult<T> {
        let v = self.0.read_constrained_int(b.lo, b.hi)?;
        // bounds are chosen to fit T
        T::try_from(v).map_err(|_| CodecError::RangeViolation {
            value: v as i128,
            lo: b.lo,
            hi: b.hi,
        })
    }

    fn count(&mut self, b: Bounds) -> CodecResult<usize> {
        Ok(self.0.read_constrained_int(b.lo, b.hi)? as usize)
    }

    fn header(&mut self) -> CodecResult<ItsPduHeader> {
        Ok(ItsPduHeader {
            protocol_version: self.int(ranges::PROTOCOL_VERSION)?,
            message_id: self.int(ranges::MESSAGE_ID)?,
            station_id: self.int(ranges::STATION_ID)?,
        })
    }

    fn position(&mut self) -> CodecResult<ReferencePosition> {
        Ok(ReferencePosition {
            latitude: self.int(ranges::LATITUDE)?,
            longitude: self.int(ranges::LONGITUDE)?,
            altitude_value: self.int(ranges::ALTITUDE)?,
            semi_major_confidence: self.int(ranges::SEMI_AXIS_CONFIDENCE)?,
            semi_minor_confidence: self.int(ranges::SEMI_AXIS_CONFIDENCE)?,
            semi_major_orientation: self.int(ranges::SEMI_MAJOR_ORIENTATION)?,
        })
    }

    fn cam(&mut self, header: ItsPduHeader) -> CodecResult<Cam> {
        let generation_delta_time = self.int(ranges::GENERATION_DELTA_TIME)?;
        self.0.read_extension_bit()?;
        let [has_lf, special_vehicle] = self.0.read_optional_flags::<2>()?;

        self.0.read_extension_bit()?;
        let basic = BasicContainer {
            station_type: self.int(ranges::STATION_TYPE)?,
            reference_position: self.position()?,
        };

        self.0.read_extension_bit()?;
        let [has_vertical] = self.0.read_optional_flags::<1>()?;
        let heading = self.int(ranges::HEADING)?;
        let speed = self.int(ranges::SPEED)?;
        let drive_direction = DriveDirection::ALL[self.0.read_enumerated(DriveDirection::ALL.len())?];
        let high_frequency = HighFrequencyContainer {
            heading,
            speed,
            drive_direction,
            vehicle_length: self.int(ranges::VEHICLE_LENGTH)?,
            vehicle_width: self.int(ranges::VEHICLE_WIDTH)?,
            longitudinal_acceleration: self.int(ranges::ACCELERATION)?,
            curvature: self.int(ranges::CURVATURE)?,
            yaw_rate: self.int(ranges::YAW_RATE)?,
            vertical_acceleration: if has_vertical {
                Some(self.int(ranges::ACCELERATION)?)
            } else {
                None
            },
        };

        let low_frequency = if has_lf {
            self.0.read_extension_bit()?;
            let vehicle_role = self.int(ranges::VEHICLE_ROLE)?;
            let exterior_lights = self.0.read_bits(8)? as u8;
            let n = self.count(ranges::PATH_HISTORY_LEN)?;
            let mut path_history = Vec::with_capacity(n);
            for _ in 0..n {
                path_history.push(DeltaPosition {
                    delta_latitude: self.int(ranges::DELTA_LATITUDE)?,
                    delta_longitude: self.int(ranges::DELTA_LONGITUDE)?,
                    delta_altitude: self.int(ranges::DELTA_ALTITUDE)?,
                });
            }
            Some(LowFrequencyContainer {
                vehicle_role,
                exterior_lights,
                path_history,
            })
        } else {
            None
        };

        Ok(Cam {
            header,
            generation_delta_time,
            basic,
            high_frequency,
            low_frequency,
            special_vehicle,
        })
    }

    fn denm(&mut self, header: ItsPduHeader) -> CodecResult<Denm> {
        self.0.read_extension_bit()?;
        let [has_situation] = self.0.read_optional_flags::<1>()?;

        self.0.read_extension_bit()?;
        let management = ManagementContainer {
            action_id: ActionId {
                originating_station_id: self.int(ranges::STATION_ID)?,
                sequence_number: self.int(ranges::SEQUENCE_NUMBER)?,
            },
            detection_time: self.int(ranges::TIMESTAMP_ITS)?,
            reference_time: self.int(ranges::TIMESTAMP_ITS)?,
            event_position: self.position()?,
            validity_duration: self.int(ranges::VALIDITY_DURATION)?,
            station_type: self.int(ranges::STATION_TYPE)?,
        };

        let situation = if has_situation {
            self.0.read_extension_bit()?;
            Some(SituationContainer {
                information_quality: self.int(ranges::INFORMATION_QUALITY)?,
                event_type: EventType {
                    cause_code: self.int(ranges::CAUSE_CODE)?,
                    sub_cause_code: self.int(ranges::SUB_CAUSE_CODE)?,
                },
            })
        } else {
            None
        };
        Ok(Denm {
            header,
            management,
            situation,
        })
    }

    fn spatem(&mut self, header: ItsPduHeader) -> CodecResult<Spatem> {
        self.0.read_extension_bit()?;
        let n = self.count(ranges::INTERSECTIONS_LEN)?;
        let mut intersections = Vec::with_capacity(n);
        for _ in 0..n {
            self.0.read_extension_bit()?;
            let intersection_id = self.int(ranges::INTERSECTION_ID)?;
            let revision = self.int(ranges::REVISION)?;
            let k = self.count(ranges::MOVEMENTS_LEN)?;
            let mut movements = Vec::with_capacity(k);
            for _ in 0..k {
                let [has_end] = self.0.read_optional_flags::<1>()?;
                let signal_group = self.int(ranges::SIGNAL_GROUP)?;
                let event_state =
                    MovementPhaseState::ALL[self.0.read_enumerated(MovementPhaseState::ALL.len())?];
                let min_end_time = if has_end {
                    Some(self.int(ranges::MIN_END_TIME)?)
                } else {
                    None
                };
                movements.push(MovementState {
                    signal_group,
                    event_state,
                    min_end_time,
                });
            }
            intersections.push(IntersectionState {
                intersection_id,
                revision,
                movements,
            });
        }
        Ok(Spatem {
            header,
            intersections,
        })
    }

    fn mapem(&mut self, header: ItsPduHeader) -> CodecResult<Mapem> {
        self.0.read_extension_bit()?;
        let n = self.count(ranges::INTERSECTIONS_LEN)?;
        let mut intersections = Vec::with_capacity(n);
        for _ in 0..n {
            self.0.read_extension_bit()?;
            let intersection_id = self.int(ranges::INTERSECTION_ID)?;
            let ref_point = self.position()?;
            let k = self.count(ranges::LANES_LEN)?;
            let mut lanes = Vec::with_capacity(k);
            for _ in 0..k {
                let lane_id = self.int(ranges::LANE_ID)?;
                let ingress = self.0.read_bit()?;
                let nodes = self.count(ranges::NODE_OFFSETS_LEN)?;
                let mut node_offsets = Vec::with_capacity(nodes);
                for _ in 0..nodes {
                    node_offsets.push(NodeOffset {
                        dx: self.int(ranges::NODE_OFFSET)?,
                        dy: self.int(ranges::NODE_OFFSET)?,
                    });
                }
                let conns = self.count(ranges::CONNECTIONS_LEN)?;
                let mut connects_to = Vec::with_capacity(conns);
                for _ in 0..conns {
                    let [has_sg] = self.0.read_optional_flags::<1>()?;
                    let lane_id = self.int(ranges::LANE_ID)?;
                    let signal_group = if has_sg {
                        Some(self.int(ranges::SIGNAL_GROUP)?)
                    } else {
                        None
                    };
                    connects_to.push(Connection {
                        lane_id,
                        signal_group,
                    });
                }
                lanes.push(Lane {
                    lane_id,
                    ingress,
                    node_offsets,
                    connects_to,
                });
            }
            intersections.push(IntersectionGeometry {
                intersection_id,
                ref_point,
                lanes,
            });
        }
        Ok(Mapem {
            header,
            intersections,
        })
    }
}
