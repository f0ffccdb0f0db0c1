//! JSON scene and configuration documents.
//!
//! ```json
//! {
//!   "meta": {"name": "demo", "author": "", "units": "m"},
//!   "surface": {"polygon": {"vertices": [[0,0],[1,0],[1,1],[0,1]]}},
//!   "objects": [
//!     {"id": "cup", "kind": "movable", "shape": {"circle": {"radius": 0.1}},
//!      "initial_pose": {"x": 0.5, "y": 0.5, "theta": 0}},
//!     {"id": "box", "kind": "new", "shape": {"polygon": {"vertices": [[0,0],[0.2,0],[0.2,0.1],[0,0.1]]}},
//!      "region": {"shape": {"circle": {"radius": 0.2}}, "pose": {"x": 0.8, "y": 0.8}}}
//!   ]
//! }
//! ```
//!
//! Object shapes are re-centred on their centroid; `initial_pose` locates that
//! centroid. Surfaces and regions are taken as written.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Footprint, GeometryError, Part, Pose, Surface, Vec2};
use crate::search::SearchParams;
use crate::scene::{Configuration, Meta, ObjectKind, ObjectRecord, Region, Scene, SceneError};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("at `{path}` (line {line}, column {column}): {message}")]
    Syntax {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("at `{path}`: {source}")]
    Shape {
        path: String,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Scene(#[from] SceneError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeSpec {
    Circle {
        radius: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        offset: Option<Vec2>,
    },
    Polygon {
        vertices: Vec<Vec2>,
    },
    Union(Vec<ShapeSpec>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionSpec {
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectSpec {
    pub id: String,
    pub kind: ObjectKind,
    pub shape: ShapeSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_pose: Option<Pose>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<RegionSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    #[serde(default)]
    pub meta: Meta,
    pub surface: ShapeSpec,
    pub objects: Vec<ObjectSpec>,
}

impl ShapeSpec {
    fn parts(&self) -> Result<Vec<Part>, GeometryError> {
        match self {
            ShapeSpec::Circle { radius, offset } => {
                Ok(vec![Part::circle(offset.unwrap_or(Vec2::ZERO), *radius)])
            }
            ShapeSpec::Polygon { vertices } => Ok(vec![Part::polygon(vertices.clone())?]),
            ShapeSpec::Union(items) => {
                let mut out = Vec::new();
                for s in items {
                    out.extend(s.parts()?);
                }
                Ok(out)
            }
        }
    }

    pub fn to_footprint(&self) -> Result<Footprint, GeometryError> {
        Footprint::new(self.parts()?)
    }

    /// Single convex part placed at `pose`, not re-centred.
    pub fn to_surface(&self, pose: &Pose) -> Result<Surface, GeometryError> {
        let parts = self.parts()?;
        match parts.as_slice() {
            [p] => {
                if let Part::Circle { radius, .. } = p {
                    if *radius < 0.0 {
                        return Err(GeometryError::BadRadius {
                            part: 0,
                            radius: *radius,
                        });
                    }
                }
                Surface::from_part(p, pose)
            }
            _ => Err(GeometryError::BadSurface),
        }
    }

    fn from_part(part: &Part) -> ShapeSpec {
        match part {
            Part::Circle { center, radius } => ShapeSpec::Circle {
                radius: *radius,
                offset: (*center != Vec2::ZERO).then_some(*center),
            },
            Part::Polygon(p) => ShapeSpec::Polygon {
                vertices: p.vertices().to_vec(),
            },
        }
    }

    pub fn from_footprint(f: &Footprint) -> ShapeSpec {
        match f.parts() {
            [p] => ShapeSpec::from_part(p),
            parts => ShapeSpec::Union(parts.iter().map(ShapeSpec::from_part).collect()),
        }
    }

    pub fn from_surface(s: &Surface) -> ShapeSpec {
        ShapeSpec::from_part(&s.as_part())
    }
}

impl SceneFile {
    pub fn from_scene(scene: &Scene) -> SceneFile {
        SceneFile {
            meta: scene.meta.clone(),
            surface: ShapeSpec::from_surface(&scene.surface),
            objects: scene
                .objects
                .iter()
                .enumerate()
                .map(|(i, o)| ObjectSpec {
                    id: o.id.clone(),
                    kind: o.kind,
                    shape: ShapeSpec::from_footprint(&o.footprint),
                    initial_pose: scene.initial().get(i),
                    region: o.region.as_ref().map(|r| RegionSpec {
                        shape: ShapeSpec::from_surface(&r.area),
                        pose: None,
                    }),
                })
                .collect(),
        }
    }

    pub fn into_scene(self) -> Result<Scene, FormatError> {
        let surface = self
            .surface
            .to_surface(&Pose::IDENTITY)
            .map_err(|source| FormatError::Shape {
                path: "surface".into(),
                source,
            })?;
        let mut objects = Vec::with_capacity(self.objects.len());
        let mut poses = Vec::with_capacity(self.objects.len());
        for (i, o) in self.objects.into_iter().enumerate() {
            let footprint = o.shape.to_footprint().map_err(|source| FormatError::Shape {
                path: format!("objects[{i}].shape"),
                source,
            })?;
            let region = match o.region {
                Some(r) => Some(Region {
                    area: r
                        .shape
                        .to_surface(&r.pose.unwrap_or(Pose::IDENTITY))
                        .map_err(|source| FormatError::Shape {
                            path: format!("objects[{i}].region.shape"),
                            source,
                        })?,
                }),
                None => None,
            };
            objects.push(ObjectRecord {
                id: o.id,
                kind: o.kind,
                footprint,
                region,
            });
            poses.push(o.initial_pose);
        }
        Ok(Scene::new(self.meta, surface, objects, Configuration::new(poses))?)
    }
}

fn parse_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T, FormatError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        FormatError::Syntax {
            path,
            line: inner.line(),
            column: inner.column(),
            message: inner.to_string(),
        }
    })
}

pub fn parse_scene(text: &str) -> Result<Scene, FormatError> {
    parse_json::<SceneFile>(text)?.into_scene()
}

/// Search and relaxation overrides; absent fields keep their defaults.
pub fn parse_params(text: &str) -> Result<SearchParams, FormatError> {
    parse_json(text)
}

pub fn scene_to_json(scene: &Scene) -> String {
    serde_json::to_string_pretty(&SceneFile::from_scene(scene)).expect("scene serializes") + "\n"
}

/// `{id: pose}` for every placed object, ordered by id.
pub fn config_to_map(scene: &Scene, config: &Configuration) -> BTreeMap<String, Pose> {
    scene
        .objects
        .iter()
        .enumerate()
        .filter_map(|(i, o)| config.get(i).map(|p| (o.id.clone(), p)))
        .collect()
}

pub fn config_to_json(scene: &Scene, config: &Configuration) -> String {
    serde_json::to_string_pretty(&config_to_map(scene, config)).expect("config serializes") + "\n"
}

pub fn parse_config(scene: &Scene, text: &str) -> Result<Configuration, FormatError> {
    let map: BTreeMap<String, Pose> = parse_json(text)?;
    let mut config = Configuration::new(vec![None; scene.len()]);
    for (id, pose) in map {
        let i = scene.index_of(&id).ok_or(SceneError::UnknownId(id))?;
        config.set(i, pose);
    }
    Ok(config)
}
