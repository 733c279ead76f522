#![allow(clippy::excessive_precision, clippy::approx_constant, clippy::type_complexity)] // frozen oracle table

//! Lift formulas against values computed independently at 40-digit precision,
//! truncated to 20 significant digits.

use hsl_core::catalog::{build_entry, Params};
use num_complex::Complex64;

const GOLDEN: &[(&str, f64, f64, &[(f64, f64)])] = &[
    (
        "cp2-flat",
        0.0,
        0.0,
        &[
            (0.7071067811865475244, 0.0),
            (0.0, 0.0),
            (0.7071067811865475244, 0.0),
        ],
    ),
    (
        "cp2-flat",
        0.5,
        -1.25,
        &[
            (0.62054458056374558056, -0.33900504942104486395),
            (-0.60854568308730488375, -0.33245002185428493657),
            (-0.12144022423744292526, -0.066343096868103306201),
        ],
    ),
    (
        "cp2-flat",
        -2.75,
        0.375,
        &[
            (-0.6535804797978707993, 0.26987507559458876415),
            (-0.33059284570311288666, -0.13650770177951153351),
            (-0.56380476580349406922, -0.2328050767961492366),
        ],
    ),
    (
        "cp2-flat",
        1.5,
        2.5,
        &[
            (0.050018754981393086271, -0.70533546922731127057),
            (-0.019198736381934512623, -0.270729444176702742),
            (-0.046187491501765061564, -0.6513092139728141126),
        ],
    ),
    (
        "cp2-flat",
        -3.0,
        -3.0,
        &[
            (-0.70003040766997507987, 0.099786914660232354854),
            (-0.62420469211497200903, -0.088978221031733173014),
            (0.31687706449701358302, 0.045169730123574252983),
        ],
    ),
    (
        "ch2-family1",
        0.0,
        0.0,
        &[
            (1.154700538379251529, 0.0),
            (0.0, 0.0),
            (0.57735026918962576451, 0.0),
        ],
    ),
    (
        "ch2-family1",
        0.5,
        -1.25,
        &[
            (1.8527380497932060727, 0.28258503702909382551),
            (-1.4646797803824451499, 0.18404453784278897692),
            (0.31194368173674598219, 0.48582349959409854025),
        ],
    ),
    (
        "ch2-family1",
        -2.75,
        0.375,
        &[
            (0.24106054288837985926, -1.1917436514750288004),
            (0.11555674912274034073, -0.3628724577141754594),
            (0.4091506849536102931, 0.40734389689220196913),
        ],
    ),
    (
        "ch2-family1",
        1.5,
        2.5,
        &[
            (1.9096281651105279745, 4.3520054132224001514),
            (0.32610768705042685962, 4.5985814430989219254),
            (-0.5715724344079768543, 0.0814756746414064982),
        ],
    ),
    (
        "ch2-family1",
        -3.0,
        -3.0,
        &[
            (-3.2730425198753300943, -6.2808160495051329618),
            (5.1526951921564068556, 4.7199424263467485139),
            (0.55435457346546895558, 0.16132061310090324564),
        ],
    ),
    (
        "ch2-family2",
        0.0,
        0.0,
        &[(0.0, 2.0), (0.0, 0.0), (1.7320508075688772935, 0.0)],
    ),
    (
        "ch2-family2",
        0.5,
        -1.25,
        &[
            (-0.84541360979396140882, 2.2017665244923548792),
            (-1.2270337216240812403, 0.2385125698938248947),
            (1.4513058578306268211, 0.945363055670417242),
        ],
    ),
    (
        "ch2-family2",
        -2.75,
        0.375,
        &[
            (1.4050580094289442935, -1.471882125083246158),
            (-0.21888611290239742243, -0.30448952293712657173),
            (-1.7310595387400643997, 0.058590727398074516505),
        ],
    ),
    (
        "ch2-family2",
        1.5,
        2.5,
        &[
            (-3.1907555624030416391, -0.26282872939244950964),
            (-2.0737917962908544188, 1.3962047076402340254),
            (-0.27809208229875650009, 1.7095802975475418252),
        ],
    ),
    (
        "ch2-family2",
        -3.0,
        -3.0,
        &[
            (0.09485170671657247274, -3.6043034214301316672),
            (1.7291912222330724814, -2.451509273274750013),
            (-1.6427518032910446163, 0.54896858997944595932),
        ],
    ),
    (
        "ch2-family3",
        0.0,
        0.0,
        &[
            (2.2941573387056176591, 0.0),
            (0.0, 0.0),
            (2.0647416048350558932, 0.0),
        ],
    ),
    (
        "ch2-family3",
        0.5,
        -1.25,
        &[
            (2.3560693581266904064, 0.91153095587678845062),
            (-0.82577747939612213751, 0.66097289173650046122),
            (1.7542200827979345738, 1.088976490033301717),
        ],
    ),
    (
        "ch2-family3",
        -2.75,
        0.375,
        &[
            (-1.8221132664292924505, -1.4420979303143221943),
            (-0.19840752003422932202, -0.31180082997243953924),
            (-2.0571043144668096135, -0.17742529171141122772),
        ],
    ),
    (
        "ch2-family3",
        1.5,
        2.5,
        &[
            (-0.27301944047238017955, 2.5611674778637240712),
            (-1.0499967225232443549, -0.51813844915841168466),
            (-0.19764439214770737149, 2.0552602241539647366),
        ],
    ),
    (
        "ch2-family3",
        -3.0,
        -3.0,
        &[
            (-2.4599949938981081641, -0.091346891906461463823),
            (-0.56653644961458804014, -0.68978125604134766184),
            (-2.0269031599120096067, 0.39347360149767673817),
        ],
    ),
    (
        "ch2-family4",
        0.0,
        0.0,
        &[
            (1.3416407864998738178, 0.0),
            (0.0, 0.0),
            (0.89442719099991587856, 0.0),
        ],
    ),
    (
        "ch2-family4",
        0.5,
        -1.25,
        &[
            (1.2677927806622236799, 0.43897775034817744091),
            (-0.81292045760848394442, -0.20757267144563425918),
            (6.0894518994815678871e-4, 0.30995732747636644498),
        ],
    ),
    (
        "ch2-family4",
        -2.75,
        0.375,
        &[
            (-0.34819799160447164815, -1.295669000417395296),
            (-0.2438840224188825963, 0.26850218238732583869),
            (-0.44667051011564085027, 0.68477194528913227536),
        ],
    ),
    (
        "ch2-family4",
        1.5,
        2.5,
        &[
            (0.72489161059262635924, 1.128951793874489642),
            (-0.14412151231945439924, -0.015685324348795163568),
            (0.87029083975286445752, 0.14689048481464156794),
        ],
    ),
    (
        "ch2-family4",
        -3.0,
        -3.0,
        &[
            (-0.55831956908454254611, -1.2199505148887190511),
            (0.28709287018182496774, 0.1894039433245954792),
            (-0.61372337639033940873, -0.5523110060608035759),
        ],
    ),
    (
        "ch2-family5",
        0.0,
        0.0,
        &[
            (0.0, 1.2551020408163265306),
            (0.0, 0.25510204081632653061),
            (0.71428571428571428571, 0.0),
        ],
    ),
    (
        "ch2-family5",
        0.5,
        -1.25,
        &[
            (0.62061916785427455833, 1.7692269503264240165),
            (1.1000447064584775586, 0.89164438843605130041),
            (0.22523025885376333246, -0.67784615668256158168),
        ],
    ),
    (
        "ch2-family5",
        -2.75,
        0.375,
        &[
            (3.2684360255406927764, -8.2954507379175109171e-3),
            (2.8867750334883610779, 0.91600692789454603318),
            (-0.43466251781169428826, -0.56680911887711510849),
        ],
    ),
    (
        "ch2-family5",
        1.5,
        2.5,
        &[
            (-1.2721686224387181274, -0.19621616142638842985),
            (-0.27467363583466369649, -0.26695336309409133994),
            (0.20261584675944733176, -0.68494591047367033492),
        ],
    ),
    (
        "ch2-family5",
        -3.0,
        -3.0,
        &[
            (1.0256850072020519054, -1.1215815959676116795),
            (0.8845649991421846833, -0.1315890993671662222),
            (0.434536653237324765, -0.56690561703510932319),
        ],
    ),
    ("ch2-family6", 0.0, 0.0, &[(1.0, 0.0), (0.0, 0.0), (0.0, 0.0)]),
    (
        "ch2-family6",
        0.5,
        -1.25,
        &[
            (1.8029067076693279007, 0.41518545969355023618),
            (-1.0969782023629658951, -0.59928192325525375034),
            (0.9253241457789551846, -0.064240078910652764095),
        ],
    ),
    (
        "ch2-family6",
        -2.75,
        0.375,
        &[
            (0.060275338513853534045, -2.9503280717952860174),
            (-0.34661339198717382904, -0.14312287201962438697),
            (0.98457771714631707814, -2.5686670797429543188),
        ],
    ),
    (
        "ch2-family6",
        1.5,
        2.5,
        &[
            (1.7880334367853561505, 4.0085610172401701625),
            (0.17684300416925727522, 2.4937374665101360774),
            (1.7172962351176532404, 3.0110660306361157316),
        ],
    ),
    (
        "ch2-family6",
        -3.0,
        -3.0,
        &[
            (-5.0215987071228483487, -3.7461375341306060934),
            (2.9699774898013363718, 0.4233600241796016663),
            (-4.0316062105224028914, -3.6050175260707388713),
        ],
    ),
    ("c2-cylinder", 0.0, 0.0, &[(1.0, 0.0), (0.0, 0.0)]),
    (
        "c2-cylinder",
        0.5,
        -1.25,
        &[(0.87758256189037271612, 0.47942553860420300027), (-1.25, 0.0)],
    ),
    (
        "c2-cylinder",
        -2.75,
        0.375,
        &[(-0.9243023786324635441, -0.38166099205233169858), (0.375, 0.0)],
    ),
    (
        "c2-cylinder",
        1.5,
        2.5,
        &[(0.070737201667702910088, 0.99749498660405443094), (2.5, 0.0)],
    ),
    (
        "c2-cylinder",
        -3.0,
        -3.0,
        &[(-0.98999249660044545727, -0.1411200080598672221), (-3.0, 0.0)],
    ),
    ("c2-torus", 0.0, 0.0, &[(1.0, 0.0), (2.0, 0.0)]),
    (
        "c2-torus",
        0.5,
        -1.25,
        &[
            (0.87758256189037271612, 0.47942553860420300027),
            (1.6219262390104358044, -1.1701945458809243096),
        ],
    ),
    (
        "c2-torus",
        -2.75,
        0.375,
        &[
            (-0.9243023786324635441, -0.38166099205233169858),
            (1.964946626202510515, 0.3728065935245397691),
        ],
    ),
    (
        "c2-torus",
        1.5,
        2.5,
        &[
            (0.070737201667702910088, 0.99749498660405443094),
            (0.6306447247905373309, 1.8979692387111724287),
        ],
    ),
    (
        "c2-torus",
        -3.0,
        -3.0,
        &[
            (-0.98999249660044545727, -0.1411200080598672221),
            (0.14147440333540582018, -1.9949899732081088619),
        ],
    ),
];

fn defaults(id: &str) -> Params {
    match id {
        "c2-torus" => Params::from([("r1".into(), 1.0), ("r2".into(), 2.0)]),
        _ => Params::new(),
    }
}

#[test]
fn every_family_matches_the_high_precision_table() {
    let mut families = std::collections::BTreeSet::new();
    for &(id, x, y, expected) in GOLDEN {
        families.insert(id);
        let entry = build_entry(id, &defaults(id)).unwrap();
        let got = entry.immersion.eval_raw(x, y, 0);
        assert_eq!(got.len(), expected.len(), "{id}");
        for (k, (jet, &(re, im))) in got.iter().zip(expected).enumerate() {
            let err = (jet.value() - Complex64::new(re, im)).norm();
            let scale = Complex64::new(re, im).norm().max(1.0);
            assert!(
                err < 1e-14 * scale,
                "{id} at ({x}, {y}) component {k}: error {err:e}"
            );
        }
    }
    assert_eq!(families.len(), 9);
}
