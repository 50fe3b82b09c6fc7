//! Reading DIMACS, Toronto and ITC-2007 inputs, and the native format
//! round trip. Inputs are inline so the example runs without datasets.

use bcsdp::ingest::{
    parse_dimacs, parse_itc2007, parse_native, parse_partition, parse_toronto, write_native, write_partition,
};

const CTT: &str = "\
Name: toy
Courses: 4
Rooms: 2
Days: 5
Periods_per_day: 4
Curricula: 1
Constraints: 1

COURSES:
c1 alice 2 2 30
c2 bob 3 2 45
c3 alice 1 1 20
c4 carol 2 1 60

ROOMS:
small 40
large 80

CURRICULA:
q1 2 c1 c2

UNAVAILABILITY_CONSTRAINTS:
c4 0 0

END.
";

fn main() -> bcsdp::Result<()> {
    let g = parse_dimacs("c a 5-cycle\np edge 5 5\ne 1 2\ne 2 3\ne 3 4\ne 4 5\ne 5 1\n")?;
    println!("DIMACS: {} vertices, edges {:?}", g.n(), g.edges());

    let doc = parse_toronto(
        "toy",
        "0001 3\n0002 2\n0003 4\n",
        "0001 0002\n0003\n0002 0003\n0001 0002\n",
    )?;
    println!(
        "Toronto: exams {:?}, enrolments {:?}, edges {:?}",
        doc.labels,
        doc.instance.event_sizes,
        doc.instance.graph.edges()
    );

    let itc = parse_itc2007(CTT)?;
    println!(
        "ITC-2007 '{}': {} courses, m = {}, edges {:?} (curriculum c1-c2, teacher c1-c3)",
        itc.name,
        itc.instance.n(),
        itc.instance.m,
        itc.instance.graph.edges()
    );

    let text = write_native(&itc)?;
    print!("native form:\n{text}");
    let back = parse_native(&text)?;
    assert_eq!(back.instance, itc.instance);
    println!("round trip preserves the instance");

    let part = parse_partition("0 3@1\n1@0\n2@0\n")?;
    print!("partition file:\n{}", write_partition(&part));
    Ok(())
}
