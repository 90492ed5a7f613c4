fn main() { println!("{}", g2jet::placeholder()); }
