public class Fib0 {
    public static int fib(int i){
        int f1=0, f2=1, c=0;
        if((i == 0) || (i == 1)) return i;
        for (int j =2; j<=i; j++){
            c=f1+f2; f1=f2; f2=c;
        }
        return c;
    }
}
